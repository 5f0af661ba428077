"""One seeded duel between two tabular Q-learners, summarized with RPDI and Delta.

Run: python demos/02_single_run.py   (a few seconds)
"""
import numpy as np

from bertrand_arena import ExperimentConfig, equilibrium_report, record_metrics, run_simulation

config = ExperimentConfig(agents=({"kind": "tql"},), horizon=200_000, metrics_window=10_000, n_runs=1)
eq = equilibrium_report(config.market)
record = run_simulation(config, seed=0)

# epoch-level price path: the agents start random and drift as exploration decays
epochs, _ = record.epoch_means()
for e in (0, len(epochs) // 4, len(epochs) // 2, len(epochs) - 1):
    print(f"epoch {e:>3}: mean prices {np.round(epochs[e], 4)}")

m = record_metrics(record, eq, config.metrics_window)
print(f"\nRPDI per firm  {np.round(m.rpdi, 3)}   (0 = Nash, 1 = monopoly)")
print(f"Delta per firm {np.round(m.delta, 3)}")
