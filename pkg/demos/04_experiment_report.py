"""Full pipeline as the CLI runs it: experiment directory, manifest, then report files.

Run: python demos/04_experiment_report.py [out_dir]
"""
import json
import sys
from pathlib import Path

from bertrand_arena import ExperimentConfig, report, run_experiment

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_runs")
config = ExperimentConfig(name="demo", agents=({"kind": "tql"},), m=7, horizon=50_000, metrics_window=5000,
                          n_runs=3)
manifest = run_experiment(config, out)
print(f"{len(manifest['runs'])} runs written under {out}, config hash {manifest['config_hash'][:12]}")

paths = report(out)
print(json.dumps(json.loads(Path(paths["aggregate"]).read_text()), indent=2))
print("\nheatmap rows:", Path(paths["heatmap"]).read_text().splitlines()[:4])
