"""Collusion metrics (RPDI and Delta), aggregation and plot-ready exports."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .equilibrium import EquilibriumReport

Z95 = 1.96


class DegenerateEquilibriumError(ValueError):
    pass


def rpdi(mean_price, eq: EquilibriumReport):
    """Relative price deviation: 0 at the Nash price, 1 at the monopoly price."""
    width = eq.p_monopoly - eq.p_nash
    if not width > 0:
        raise DegenerateEquilibriumError("monopoly price must exceed the Nash price")
    return (np.asarray(mean_price, dtype=float) - eq.p_nash) / width


def delta(mean_profit, eq: EquilibriumReport):
    """Normalized profit: 0 at Nash profit, 1 at per-firm monopoly profit."""
    width = eq.pi_monopoly - eq.pi_nash
    if not width > 0:
        raise DegenerateEquilibriumError("monopoly profit must exceed the Nash profit")
    return (np.asarray(mean_profit, dtype=float) - eq.pi_nash) / width


def window_mean(series, window_len: int):
    """Mean over the last ``window_len`` entries (along axis 0)."""
    series = np.asarray(series, dtype=float)
    if window_len < 1 or len(series) < window_len:
        raise ValueError(f"series of length {len(series)} is shorter than the window {window_len}")
    return series[-window_len:].mean(axis=0)


@dataclass
class RunMetrics:
    label: str
    seed: int
    mean_price: tuple
    mean_profit: tuple
    rpdi: tuple
    delta: tuple


def run_metrics(label: str, seed: int, prices, profits, eq: EquilibriumReport, window_len: int) -> RunMetrics:
    """Windowed RPDI/Delta for both agents from ``(T, 2)`` price and profit series."""
    p = window_mean(prices, window_len)
    r = window_mean(profits, window_len)
    return RunMetrics(label, seed, tuple(map(float, p)), tuple(map(float, r)),
                      tuple(map(float, rpdi(p, eq))), tuple(map(float, delta(r, eq))))


def record_metrics(record, eq: EquilibriumReport, window_len: int) -> RunMetrics:
    tail = record.tail(window_len)
    return run_metrics(record.label, record.seed, tail.prices(), tail.profits(), eq, window_len)


@dataclass
class Aggregate:
    n: int
    mean: float
    std: float
    ci95: float


def aggregate(values) -> Aggregate:
    """Mean, sample std (n-1) and normal-approximation 95% CI half-width."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        raise ValueError("nothing to aggregate")
    std = float(v.std(ddof=1)) if n > 1 else 0.0
    return Aggregate(n, float(v.mean()), std, Z95 * std / np.sqrt(n))


def aggregate_runs(runs: list[RunMetrics]) -> dict:
    """``{label: {agent: {"rpdi": Aggregate, "delta": Aggregate}}}``."""
    out: dict = {}
    for label in sorted({r.label for r in runs}):
        group = [r for r in runs if r.label == label]
        out[label] = {
            agent: {
                "rpdi": aggregate([r.rpdi[agent] for r in group]),
                "delta": aggregate([r.delta[agent] for r in group]),
            }
            for agent in (0, 1)
        }
    return out


def pairwise_diff(runs: list[RunMetrics]) -> list[dict]:
    """Agent 0 minus agent 1, per run. Negative RPDI difference: agent 0 prices lower."""
    return [{"label": r.label, "seed": r.seed,
             "rpdi_diff": r.rpdi[0] - r.rpdi[1], "delta_diff": r.delta[0] - r.delta[1]} for r in runs]


def price_heatmap(action_windows, m: int) -> np.ndarray:
    """Per-agent frequency of each grid index, shape ``(2, m)``; rows sum to 1.

    ``action_windows`` is an iterable of ``(W, 2)`` index arrays (one per run),
    already cut to the window of interest.
    """
    counts = np.zeros((2, m))
    for acts in action_windows:
        acts = np.asarray(acts)
        for agent in (0, 1):
            counts[agent] += np.bincount(acts[:, agent], minlength=m)[:m]
    totals = counts.sum(axis=1, keepdims=True)
    if np.any(totals == 0):
        raise ValueError("no actions to count")
    return counts / totals


def boxstats(values) -> dict:
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"min": float(v.min()), "q1": float(q1), "median": float(med), "q3": float(q3), "max": float(v.max())}


# -- exports -----------------------------------------------------------------


def _fmt(x) -> str:
    return f"{x:.9g}"


def _writer(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_summary_csv(path, runs: list[RunMetrics], scenario: str, market: str) -> Path:
    fh, w = _writer(path)
    with fh:
        w.writerow(["scenario", "market", "agent", "run_seed", "rpdi", "delta"])
        for r in runs:
            for agent in (0, 1):
                w.writerow([scenario, market, f"{r.label}:{agent}", r.seed, _fmt(r.rpdi[agent]), _fmt(r.delta[agent])])
    return Path(path)


def write_aggregate_json(path, runs: list[RunMetrics], eq: EquilibriumReport) -> Path:
    agg = aggregate_runs(runs)
    diffs = pairwise_diff(runs)
    body = {
        "equilibrium": eq.to_dict(),
        "groups": {
            label: {str(agent): {k: asdict(v) for k, v in d.items()} for agent, d in per_agent.items()}
            for label, per_agent in agg.items()
        },
        "pairwise": {
            label: {
                "rpdi_diff": asdict(aggregate([d["rpdi_diff"] for d in diffs if d["label"] == label])),
                "delta_diff": asdict(aggregate([d["delta_diff"] for d in diffs if d["label"] == label])),
            }
            for label in agg
        },
    }
    Path(path).write_text(json.dumps(body, indent=2) + "\n")
    return Path(path)


def write_heatmap_csv(path, heatmaps: dict, grid) -> Path:
    """``heatmaps`` maps a group label to a ``(2, m)`` frequency table."""
    fh, w = _writer(path)
    with fh:
        w.writerow(["agent", "price", "frequency"])
        for label, table in heatmaps.items():
            for agent in (0, 1):
                for price, freq in zip(grid, table[agent]):
                    w.writerow([f"{label}:{agent}", _fmt(price), _fmt(freq)])
    return Path(path)


def write_boxstats_csv(path, runs: list[RunMetrics]) -> Path:
    """Five-number summaries of per-agent RPDI/Delta and of the agent 0 - agent 1
    differences, per group."""
    fh, w = _writer(path)
    diffs = pairwise_diff(runs)
    with fh:
        w.writerow(["group", "metric", "min", "q1", "median", "q3", "max"])
        for label in sorted({r.label for r in runs}):
            group = [r for r in runs if r.label == label]
            series = {}
            for agent in (0, 1):
                series[f"rpdi{agent}"] = [r.rpdi[agent] for r in group]
                series[f"delta{agent}"] = [r.delta[agent] for r in group]
            series["rpdi_diff"] = [d["rpdi_diff"] for d in diffs if d["label"] == label]
            series["delta_diff"] = [d["delta_diff"] for d in diffs if d["label"] == label]
            for metric, values in series.items():
                b = boxstats(values)
                w.writerow([label, metric, *(_fmt(b[k]) for k in ("min", "q1", "median", "q3", "max"))])
    return Path(path)


def report(exp_dir) -> dict:
    """Compute metrics for a finished experiment directory and write
    ``summary.csv``, ``aggregate.json``, ``heatmap.csv`` and ``boxstats.csv``."""
    from .harness import read_tail_csv

    exp_dir = Path(exp_dir)
    manifest_path = exp_dir / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"{exp_dir} holds no manifest.json; run an experiment first")
    manifest = json.loads(manifest_path.read_text())
    if not manifest.get("runs"):
        raise ValueError(f"{exp_dir}: manifest lists no completed runs")
    eq = EquilibriumReport(**manifest["equilibrium"])
    grid = manifest["grid"]
    window = manifest["config"]["metrics_window"]
    runs, windows = [], {}
    for entry in manifest["runs"]:
        actions, prices, profits = read_tail_csv(exp_dir / entry["tail"])
        runs.append(run_metrics(entry["label"], entry["seed"], prices, profits, eq, window))
        windows.setdefault(entry["label"], []).append(actions[-window:])
    heat = {label: price_heatmap(w, len(grid)) for label, w in windows.items()}
    market = manifest["config"]["market"]["kind"]
    paths = {
        "summary": write_summary_csv(exp_dir / "summary.csv", runs, manifest["scenario"], market),
        "aggregate": write_aggregate_json(exp_dir / "aggregate.json", runs, eq),
        "heatmap": write_heatmap_csv(exp_dir / "heatmap.csv", heat, grid),
        "boxstats": write_boxstats_csv(exp_dir / "boxstats.csv", runs),
    }
    return {k: str(v) for k, v in paths.items()}
