"""Every experiment protocol at toy scale: homogeneous play, learning-rate asymmetry,
pretrained TQL against a deep learner, cross-market weight exchange, and the state-space sweep.

Run: python demos/03_scenarios.py   (under a minute on one core)
"""
import numpy as np

from bertrand_arena import ExperimentConfig, equilibrium_report, record_metrics, run_all

SMALL_NET = {"hidden": [32, 32]}
scenarios = {
    "homogeneous PPO": dict(agents=({"kind": "ppo", **SMALL_NET},), horizon=20_000),
    "learning-rate asymmetry": dict(scenario="lr_asymmetry", horizon=20_000),
    "pretrained TQL vs DQN": dict(scenario="tql_vs_drl", agents=({"kind": "tql"}, {"kind": "dqn", **SMALL_NET}),
                                  horizon=10_000, pretrain_horizon=100_000),
    "PPO/DQN weight exchange": dict(scenario="hetero_exchange", exchange_period=1000, horizon=10_000,
                                    agents=({"kind": "ppo", **SMALL_NET}, {"kind": "dqn", **SMALL_NET})),
    "state-space sweep": dict(scenario="state_space_sweep", horizon=20_000, m=7),
}

for title, kw in scenarios.items():
    config = ExperimentConfig(**{"n_runs": 1, "metrics_window": 5000, **kw})
    eq = equilibrium_report(config.market)
    records = run_all(config)
    print(f"\n== {title}")
    for rec in records:
        m = record_metrics(rec, eq, config.metrics_window)
        print(f"  {rec.label:<28} seed {rec.seed}: RPDI {np.round(m.rpdi, 3)}  Delta {np.round(m.delta, 3)}")
