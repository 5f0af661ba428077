"""Command-line entry point: ``bertrand-arena <subcommand>``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from .equilibrium import equilibrium_report
from .harness import ConfigError, build_config, load_config, run_experiment, run_simulation, write_run_csv, write_tail_csv
from .market import MarketError, MarketSpec, profit_surface, write_surface_csv
from .metrics import record_metrics, report

OUT_ENV = "BERTRAND_ARENA_OUT"


def preset_names() -> list[str]:
    files = resources.files("bertrand_arena") / "presets"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def resolve_config(name_or_path: str) -> dict:
    path = Path(name_or_path)
    if path.exists():
        return load_config(path)
    preset = resources.files("bertrand_arena") / "presets" / f"{name_or_path}.yaml"
    if preset.is_file():
        with resources.as_file(preset) as p:
            return load_config(p)
    raise ConfigError(f"{name_or_path!r} is neither a file nor a preset ({', '.join(preset_names())})")


def _market_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["standard", "edgeworth", "logit"], default="logit")
    p.add_argument("--c", type=float, help="marginal cost (default 1 for logit, 0 otherwise)")
    p.add_argument("--g", type=float, default=2.0, help="product quality (logit)")
    p.add_argument("--mu", type=float, default=0.25, help="substitutability (logit)")
    p.add_argument("--k", type=float, default=0.6, help="capacity (edgeworth)")


def _market(args) -> MarketSpec:
    c = args.c if args.c is not None else (1.0 if args.model == "logit" else 0.0)
    return MarketSpec(args.model, c=c, g=args.g, mu=args.mu, k=args.k)


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "bertrand_runs")


def _config(args):
    d = resolve_config(args.config)
    overrides = list(args.override or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"base_seed={args.seed}")
    return build_config(d, overrides)


def cmd_equilibria(args) -> int:
    spec = _config(args).market if args.config else _market(args)
    print(json.dumps(equilibrium_report(spec).to_dict(), indent=2))
    return 0


def cmd_surface(args) -> int:
    spec = _market(args)
    rows = profit_surface(spec, args.resolution)
    path = write_surface_csv(_out_dir(args) / f"surface_{spec.kind.value}.csv", rows)
    print(path)
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _out_dir(args)
    rec = run_simulation(cfg, cfg.base_seed)
    write_run_csv(out / f"seed_{rec.seed}.csv", rec)
    write_tail_csv(out / f"seed_{rec.seed}_tail.csv", rec, cfg.metrics_window)
    m = record_metrics(rec, equilibrium_report(cfg.market), cfg.metrics_window)
    print(json.dumps({"seed": rec.seed, "rpdi": m.rpdi, "delta": m.delta}))
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args)
    manifest = run_experiment(cfg, _out_dir(args), n_workers=args.n_workers)
    for f in manifest["failures"]:
        print(f"run {f['label']} seed {f['seed']} failed: {f['error']}", file=sys.stderr)
    if not args.quiet:
        print(f"{len(manifest['runs'])} run(s) written to {_out_dir(args)}")
    return 1 if manifest["failures"] else 0


def cmd_report(args) -> int:
    paths = report(args.dir)
    print(json.dumps(paths, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bertrand-arena",
                                     description="Repeated Bertrand pricing games between RL agents.")
    parser.add_argument("--quiet", action="store_true", help="suppress per-epoch progress lines")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="YAML config file or preset name")
        p.add_argument("--override", action="append", metavar="KEY=VALUE", help="repeatable config override")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./bertrand_runs)")
        p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    p = sub.add_parser("equilibria", help="print Nash/monopoly benchmarks as JSON")
    _market_args(p)
    p.add_argument("--config", help="take the market from a config file or preset")
    p.add_argument("--override", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("surface", help="write firm 0's profit surface as CSV")
    _market_args(p)
    p.add_argument("--resolution", type=int, default=101)
    p.add_argument("--out")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("simulate", help="single seeded run")
    common(p)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run every seed of a scenario")
    common(p)
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--n-workers", type=int, default=1)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="metrics and plot data for a finished experiment directory")
    p.add_argument("dir")
    p.set_defaults(func=cmd_report)

    sub.add_parser("presets", help="list bundled scenario presets").set_defaults(
        func=lambda a: print("\n".join(preset_names())) or 0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(asctime)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, MarketError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
