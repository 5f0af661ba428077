"""Seeded simulation runs and the five experiment scenarios.

A run is one infinite-horizon repeated game between two players, truncated at
``horizon`` steps. Epochs are logging windows only; the environment is never
reset mid-run. Every run owns independent generator streams derived from its
seed, so runs can execute in any order or in parallel with identical results.
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path

import numpy as np
import yaml

from .dqn import DqnAgent, DqnConfig
from .equilibrium import EquilibriumReport, equilibrium_report
from .market import MarketSpec
from .mdp import (Audience, Info, PriceGrid, PricingEnv, StateSpec, build_grid,
                  neural_input_dim, state_space_size)
from .ppo import PpoAgent, PpoConfig
from .tql import GreedyPolicy, TqlAgent, TqlConfig, default_beta, load_qtable, save_qtable

log = logging.getLogger(__name__)

TQL_HORIZON = 1_000_000
DRL_HORIZON = 100_000
LEARNING_RATES = (0.01, 0.05, 0.1, 0.5)


class ConfigError(ValueError):
    pass


class Scenario(str, Enum):
    LR_ASYMMETRY = "lr_asymmetry"
    HOMOGENEOUS = "homogeneous"
    TQL_VS_DRL = "tql_vs_drl"
    HETERO_EXCHANGE = "hetero_exchange"
    STATE_SPACE_SWEEP = "state_space_sweep"


_AGENT_CONFIGS = {"tql": TqlConfig, "dqn": DqnConfig, "ppo": PpoConfig}


def agent_config(d: dict):
    """``{"kind": "dqn", "lr": 1e-3, ...}`` -> ``(kind, DqnConfig(...))``."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _AGENT_CONFIGS:
        raise ConfigError(f"agent kind must be one of {sorted(_AGENT_CONFIGS)}, got {kind!r}")
    cls = _AGENT_CONFIGS[kind]
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown {kind} settings: {sorted(unknown)}")
    try:
        return kind, cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {kind} settings: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario = Scenario.HOMOGENEOUS
    market: MarketSpec = field(default_factory=MarketSpec.logit)
    m: int = 15
    zeta: float = 0.1
    memory_len: int = 1
    info: Info = Info.FULL
    agents: tuple = ({"kind": "tql"}, {"kind": "tql"})
    horizon: int | None = None
    epoch_len: int = 1000
    n_runs: int = 20
    base_seed: int = 0
    exchange_period: int = 1000
    metrics_window: int = 10_000
    learning_rates: tuple = LEARNING_RATES
    pretrain_horizon: int = TQL_HORIZON
    freeze_agent: int = 0
    fixed_start: int | None = None
    name: str = "experiment"

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        try:
            set_("scenario", Scenario(self.scenario))
            set_("info", Info(self.info))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if isinstance(self.market, dict):
            try:
                set_("market", MarketSpec.from_dict(self.market))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid market: {exc}") from exc
        agents = tuple(dict(a) for a in self.agents)
        if len(agents) == 1:
            agents = agents * 2
        if len(agents) != 2:
            raise ConfigError("exactly two agents are required")
        for a in agents:
            agent_config(a)
        set_("agents", agents)
        set_("learning_rates", tuple(float(x) for x in self.learning_rates))
        if self.n_runs < 1:
            raise ConfigError("n_runs must be >= 1")
        if self.epoch_len < 1:
            raise ConfigError("epoch_len must be >= 1")
        if self.run_horizon % self.epoch_len:
            raise ConfigError(f"horizon {self.run_horizon} is not a multiple of epoch_len {self.epoch_len}")
        if self.metrics_window < 1 or self.metrics_window > self.run_horizon:
            raise ConfigError("metrics_window must lie in [1, horizon]")
        if self.exchange_period < 1:
            raise ConfigError("exchange_period must be >= 1")
        if self.freeze_agent not in (0, 1):
            raise ConfigError("freeze_agent must be 0 or 1")
        kinds = [a["kind"] for a in agents]
        if self.scenario is Scenario.HETERO_EXCHANGE and kinds != ["ppo", "dqn"]:
            raise ConfigError("hetero_exchange expects agents [ppo, dqn]")
        if self.scenario is Scenario.TQL_VS_DRL and (kinds[0] != "tql" or kinds[1] == "tql"):
            raise ConfigError("tql_vs_drl expects agents [tql, dqn|ppo]")
        if self.scenario in (Scenario.LR_ASYMMETRY, Scenario.STATE_SPACE_SWEEP) and kinds != ["tql", "tql"]:
            raise ConfigError(f"{self.scenario.value} runs two TQL agents")
        StateSpec(self.memory_len, self.info)

    @property
    def run_horizon(self) -> int:
        if self.horizon is not None:
            return int(self.horizon)
        kinds = {a["kind"] for a in self.agents}
        if self.scenario is Scenario.TQL_VS_DRL or kinds != {"tql"}:
            return DRL_HORIZON
        return TQL_HORIZON

    @property
    def state_spec(self) -> StateSpec:
        return StateSpec(self.memory_len, self.info)

    @property
    def seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.n_runs)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenario"] = self.scenario.value
        d["info"] = self.info.value
        d["market"] = self.market.to_dict()
        d["agents"] = [dict(a) for a in self.agents]
        d["learning_rates"] = list(self.learning_rates)
        return _plain(d)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _plain(x):
    if isinstance(x, Enum):
        return x.value
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def load_config(path) -> dict:
    with open(path) as fh:
        d = yaml.safe_load(fh) or {}
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return d


def apply_overrides(d: dict, overrides) -> dict:
    """Apply ``key=value`` strings; dotted keys reach into nested mappings and
    agent lists (``agents.1.lr=0.0005``). Values are parsed as YAML scalars."""
    d = json.loads(json.dumps(d))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        parts = key.strip().split(".")
        if parts[0] not in {f.name for f in fields(ExperimentConfig)}:
            raise ConfigError(f"unknown config key {parts[0]!r}")
        node = d
        for p in parts[:-1]:
            if isinstance(node, list):
                node = node[int(p)]
            else:
                if p == "agents" and len(node.get(p, [])) == 1:
                    node[p] = [node[p][0], dict(node[p][0])]
                node = node.setdefault(p, {})
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
    return d


def build_config(d: dict, overrides=()) -> ExperimentConfig:
    return ExperimentConfig.from_dict(apply_overrides(d, overrides))


# -- records -----------------------------------------------------------------


@dataclass
class RunRecord:
    """Outcome of one run.

    ``actions`` holds every step's price indices (shape ``(horizon, 2)``);
    prices and profits are exact lookups from it.
    """

    label: str
    seed: int
    grid: np.ndarray
    reward_table: np.ndarray
    actions: np.ndarray
    epoch_len: int
    n_updates: tuple = (0, 0)
    extra: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.actions)

    def prices(self) -> np.ndarray:
        return self.grid[self.actions]

    def profits(self) -> np.ndarray:
        a0, a1 = self.actions[:, 0], self.actions[:, 1]
        return np.column_stack([self.reward_table[a0, a1], self.reward_table[a1, a0]])

    def epoch_means(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.horizon // self.epoch_len
        p = self.prices().reshape(n, self.epoch_len, 2).mean(axis=1)
        r = self.profits().reshape(n, self.epoch_len, 2).mean(axis=1)
        return p, r

    def tail(self, window: int) -> "RunRecord":
        return replace(self, actions=self.actions[-window:])


# -- players -----------------------------------------------------------------


def make_player(agent: dict, state_spec: StateSpec, m: int, horizon: int, rng):
    """Build a learning agent and the audience its observations need."""
    kind, cfg = agent_config(agent)
    if kind == "tql":
        beta = cfg.beta if cfg.beta is not None else default_beta(horizon)
        return TqlAgent(state_space_size(state_spec, m), m, cfg, rng, beta=beta), Audience.TABULAR, False
    dim = neural_input_dim(state_spec, m, cfg.one_hot)
    if kind == "dqn":
        beta = cfg.beta if cfg.beta is not None else default_beta(horizon)
        return DqnAgent(dim, m, cfg, rng, beta=beta), Audience.NEURAL, cfg.one_hot
    return PpoAgent(dim, m, cfg, rng), Audience.NEURAL, cfg.one_hot


def _streams(seed: int, phase: int, n: int):
    ss = np.random.SeedSequence([int(seed), int(phase)])
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def setup(config: ExperimentConfig, state_spec: StateSpec | None = None):
    eq = equilibrium_report(config.market)
    grid = build_grid(config.market, eq, config.m, config.zeta)
    return eq, grid, state_spec or config.state_spec


def play(env: PricingEnv, players, horizon: int, env_rng, epoch_len: int, label: str = "", seed: int = 0,
         hooks=()) -> np.ndarray:
    """Run ``horizon`` simultaneous-move steps; returns the ``(horizon, 2)`` action log.

    ``hooks`` are called as ``hook(t)`` after every step.
    """
    p0, p1 = players
    v0, v1 = env.reset(env_rng)
    dtype = np.int16 if env.grid.m < 2**15 else np.int64
    actions = np.empty((horizon, 2), dtype=dtype)
    rewards = env.rewards
    for t in range(horizon):
        a0 = p0.act(v0, t)
        a1 = p1.act(v1, t)
        out = env.step(a0, a1)
        n0, n1 = out.views
        p0.observe(v0, a0, rewards[a0, a1], n0, t)
        p1.observe(v1, a1, rewards[a1, a0], n1, t)
        actions[t, 0] = a0
        actions[t, 1] = a1
        v0, v1 = n0, n1
        for hook in hooks:
            hook(t)
        if (t + 1) % epoch_len == 0 and log.isEnabledFor(logging.INFO):
            e = actions[t + 1 - epoch_len:t + 1]
            pr = env.grid.values[e].mean(axis=0)
            log.info("%s seed=%d epoch=%d price0=%.4f price1=%.4f", label, seed, (t + 1) // epoch_len, pr[0], pr[1])
    return actions


def _record(label, seed, env, actions, epoch_len, players, extra=None) -> RunRecord:
    counts = tuple(getattr(p, "n_updates", 0) for p in players)
    return RunRecord(label, seed, env.grid.values.copy(), env.rewards, actions, epoch_len, counts, dict(extra or {}))


def run_simulation(config: ExperimentConfig, seed: int, players=None, label: str | None = None,
                   state_spec: StateSpec | None = None, phase: int = 0, keep_players: bool = False) -> RunRecord:
    """One run of ``config.agents`` against each other (or of given ``players``)."""
    eq, grid, sspec = setup(config, state_spec)
    horizon = config.run_horizon
    env_rng, rng0, rng1 = _streams(seed, phase, 3)
    if players is None:
        built = [make_player(a, sspec, grid.m, horizon, r) for a, r in zip(config.agents, (rng0, rng1))]
        players = [b[0] for b in built]
        audiences = [b[1] for b in built]
        one_hot = [b[2] for b in built]
    else:
        audiences = [getattr(p, "audience", Audience.TABULAR) for p in players]
        one_hot = [getattr(p, "one_hot", False) for p in players]
    env = PricingEnv(config.market, grid, sspec, audiences, one_hot, fixed_start=config.fixed_start)
    label = label or "_".join(a["kind"] for a in config.agents)
    actions = play(env, players, horizon, env_rng, config.epoch_len, label, seed)
    extra = {"players": players} if keep_players else {}
    return _record(label, seed, env, actions, config.epoch_len, players, extra)


def pretrain_tql(config: ExperimentConfig, seed: int, path=None):
    """Homogeneous TQL self-play for ``pretrain_horizon`` steps.

    Returns ``(GreedyPolicy, steps_executed)`` and writes the frozen table to
    ``path`` when given.
    """
    tql = config.agents[0]
    pre = replace(config, scenario=Scenario.HOMOGENEOUS, agents=(tql, tql), horizon=config.pretrain_horizon,
                  metrics_window=min(config.metrics_window, config.pretrain_horizon),
                  epoch_len=_divisor(config.pretrain_horizon, config.epoch_len))
    rec = run_simulation(pre, seed, label="pretrain", phase=1, keep_players=True)
    agent = rec.extra["players"][config.freeze_agent]
    if path is not None:
        save_qtable(path, agent.q, pre.state_spec)
    return agent.freeze(), rec.horizon


def _divisor(horizon: int, epoch_len: int) -> int:
    return epoch_len if horizon % epoch_len == 0 else horizon


def run_tql_vs_drl(config: ExperimentConfig, pretrained, seed: int) -> RunRecord:
    """Frozen pretrained TQL (player 0) against a learning DRL agent (player 1).

    ``pretrained`` is a :class:`GreedyPolicy` or a Q-table file.
    """
    if not isinstance(pretrained, GreedyPolicy):
        q, sspec = load_qtable(pretrained)
        if sspec != config.state_spec:
            raise ConfigError(f"pretrained table was built for {sspec}, config uses {config.state_spec}")
        pretrained = GreedyPolicy(q)
    eq, grid, sspec = setup(config)
    horizon = config.run_horizon
    env_rng, _, rng1 = _streams(seed, 0, 3)
    drl, audience, one_hot = make_player(config.agents[1], sspec, grid.m, horizon, rng1)
    env = PricingEnv(config.market, grid, sspec, (Audience.TABULAR, audience), (False, one_hot),
                     fixed_start=config.fixed_start)
    label = f"tql_vs_{config.agents[1]['kind']}"
    actions = play(env, (pretrained, drl), horizon, env_rng, config.epoch_len, label, seed)
    return _record(label, seed, env, actions, config.epoch_len, (pretrained, drl))


def run_hetero_exchange(config: ExperimentConfig, seed: int, probe=None) -> tuple[RunRecord, RunRecord]:
    """PPO and DQN each learn in their own market against a frozen greedy copy
    of the other, and the copies are refreshed every ``exchange_period`` steps.

    Both markets advance in one loop. ``probe(t, home_ppo, foreign_ppo,
    home_dqn, foreign_dqn)`` is called right after each exchange.
    """
    eq, grid, sspec = setup(config)
    horizon = config.run_horizon
    rng_a, rng_b, rng_ppo, rng_dqn = _streams(seed, 0, 4)
    ppo, _, oh_p = make_player(config.agents[0], sspec, grid.m, horizon, rng_ppo)
    dqn, _, oh_d = make_player(config.agents[1], sspec, grid.m, horizon, rng_dqn)
    foreign_ppo = ppo.frozen()
    foreign_dqn = dqn.frozen()
    env_ppo = PricingEnv(config.market, grid, sspec, (Audience.NEURAL,) * 2, (oh_p, oh_d), config.fixed_start)
    env_dqn = PricingEnv(config.market, grid, sspec, (Audience.NEURAL,) * 2, (oh_p, oh_d), config.fixed_start)

    va = env_ppo.reset(rng_a)
    vb = env_dqn.reset(rng_b)
    dtype = np.int16
    acts_a = np.empty((horizon, 2), dtype=dtype)
    acts_b = np.empty((horizon, 2), dtype=dtype)
    R = env_ppo.rewards
    n_exchanges = 0
    for t in range(horizon):
        a0, a1 = ppo.act(va[0], t), foreign_dqn.act(va[1], t)
        b0, b1 = foreign_ppo.act(vb[0], t), dqn.act(vb[1], t)
        na = env_ppo.step(a0, a1).views
        nb = env_dqn.step(b0, b1).views
        ppo.observe(va[0], a0, R[a0, a1], na[0], t)
        dqn.observe(vb[1], b1, R[b1, b0], nb[1], t)
        acts_a[t] = a0, a1
        acts_b[t] = b0, b1
        va, vb = na, nb
        if (t + 1) % config.exchange_period == 0:
            foreign_ppo.load(ppo.actor.params)
            foreign_dqn.load(dqn.q.params)
            n_exchanges += 1
            if probe is not None:
                probe(t, ppo, foreign_ppo, dqn, foreign_dqn)
        if (t + 1) % config.epoch_len == 0 and log.isEnabledFor(logging.INFO):
            pa = grid.values[acts_a[t + 1 - config.epoch_len:t + 1]].mean(axis=0)
            pb = grid.values[acts_b[t + 1 - config.epoch_len:t + 1]].mean(axis=0)
            log.info("hetero seed=%d epoch=%d ppo_env=(%.4f, %.4f) dqn_env=(%.4f, %.4f)",
                     seed, (t + 1) // config.epoch_len, pa[0], pa[1], pb[0], pb[1])
    extra = {"n_exchanges": n_exchanges}
    rec_a = _record("ppo_env", seed, env_ppo, acts_a, config.epoch_len, (ppo, foreign_dqn), extra)
    rec_b = _record("dqn_env", seed, env_dqn, acts_b, config.epoch_len, (foreign_ppo, dqn), extra)
    return rec_a, rec_b


def lr_pairings(rates=LEARNING_RATES) -> list[tuple[float, float]]:
    """Every pair of distinct rates with the faster learner first."""
    return [(hi, lo) for lo, hi in itertools.combinations(sorted(rates), 2)]


def sweep_state_specs(lengths=(1, 2, 3)) -> dict[str, StateSpec]:
    specs = [StateSpec(l, Info.FULL) for l in lengths] + [StateSpec(l, Info.SELF) for l in lengths]
    return {s.label: s for s in specs}


# -- jobs --------------------------------------------------------------------


@dataclass(frozen=True)
class Job:
    label: str
    seed: int
    config: ExperimentConfig


def plan_jobs(config: ExperimentConfig) -> list[Job]:
    """Expand a scenario into independent (label, seed, config) jobs."""
    jobs = []
    seeds = config.seeds
    if config.scenario is Scenario.LR_ASYMMETRY:
        for hi, lo in lr_pairings(config.learning_rates):
            agents = ({**config.agents[0], "alpha": hi}, {**config.agents[1], "alpha": lo})
            cfg = replace(config, agents=agents)
            jobs += [Job(f"{hi:g}_{lo:g}", s, cfg) for s in seeds]
    elif config.scenario is Scenario.STATE_SPACE_SWEEP:
        for label, sspec in sweep_state_specs().items():
            cfg = replace(config, memory_len=sspec.memory_len, info=sspec.info)
            jobs += [Job(label, s, cfg) for s in seeds]
    elif config.scenario is Scenario.TQL_VS_DRL:
        jobs += [Job(f"tql_vs_{config.agents[1]['kind']}", s, config) for s in seeds]
    elif config.scenario is Scenario.HETERO_EXCHANGE:
        jobs += [Job("hetero", s, config) for s in seeds]
    else:
        label = "_".join(a["kind"] for a in config.agents)
        jobs += [Job(label, s, config) for s in seeds]
    return jobs


def run_job(job: Job, workdir=None) -> list[RunRecord]:
    cfg = job.config
    if cfg.scenario is Scenario.HETERO_EXCHANGE:
        return list(run_hetero_exchange(cfg, job.seed))
    if cfg.scenario is Scenario.TQL_VS_DRL:
        path = None if workdir is None else Path(workdir) / "pretrained" / f"tql_seed_{job.seed}.qtable"
        policy, _ = pretrain_tql(cfg, job.seed, path)
        return [run_tql_vs_drl(cfg, policy, job.seed)]
    return [run_simulation(cfg, job.seed, label=job.label)]


def run_lr_asymmetry(config: ExperimentConfig) -> list[RunRecord]:
    return run_all(replace(config, scenario=Scenario.LR_ASYMMETRY))


def run_state_space_sweep(config: ExperimentConfig) -> list[RunRecord]:
    return run_all(replace(config, scenario=Scenario.STATE_SPACE_SWEEP))


def _run_job_safe(args):
    job, workdir = args
    try:
        return job, run_job(job, workdir), None
    except Exception as exc:  # reported per seed by the caller
        log.exception("run %s seed=%d failed", job.label, job.seed)
        return job, [], f"{type(exc).__name__}: {exc}"


def run_all(config: ExperimentConfig, n_workers: int = 1, workdir=None, raise_on_error: bool = True):
    """Execute every job of a scenario; records come back sorted by (label, seed)."""
    jobs = plan_jobs(config)
    args = [(j, workdir) for j in jobs]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_job_safe, args))
    else:
        results = [_run_job_safe(a) for a in args]
    records, failures = [], []
    for job, recs, err in results:
        records += recs
        if err:
            failures.append((job.label, job.seed, err))
    records.sort(key=lambda r: (r.label, r.seed))
    if failures and raise_on_error:
        raise RuntimeError(f"{len(failures)} run(s) failed: {failures}")
    return (records, failures) if not raise_on_error else records


# -- output files ------------------------------------------------------------


def _fmt(x) -> str:
    return f"{x:.9g}"


def write_run_csv(path, record: RunRecord) -> Path:
    """Per-epoch means: ``epoch,price0,price1,profit0,profit1``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    prices, profits = record.epoch_means()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "price0", "price1", "profit0", "profit1"])
        for e in range(len(prices)):
            w.writerow([e + 1, *map(_fmt, prices[e]), *map(_fmt, profits[e])])
    return path


def write_tail_csv(path, record: RunRecord, window: int) -> Path:
    """Last ``window`` steps: ``step,index0,index1,price0,price1,profit0,profit1``."""
    path = Path(path)
    tail = record.tail(window)
    prices, profits = tail.prices(), tail.profits()
    start = record.horizon - window
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "index0", "index1", "price0", "price1", "profit0", "profit1"])
        for i in range(window):
            w.writerow([start + i, int(tail.actions[i, 0]), int(tail.actions[i, 1]),
                        *map(_fmt, prices[i]), *map(_fmt, profits[i])])
    return path


def read_tail_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(actions, prices, profits)`` arrays from a tail file."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1:3].astype(np.int64), data[:, 3:5], data[:, 5:7]


def run_experiment(config: ExperimentConfig, out_dir, n_workers: int = 1) -> dict:
    """Run a scenario and write per-run CSVs plus ``manifest.json`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    eq, grid, _ = setup(config)
    records, failures = run_all(config, n_workers, workdir=out, raise_on_error=False)
    runs = []
    for rec in records:
        base = out / "runs" / rec.label
        csv_path = write_run_csv(base / f"seed_{rec.seed}.csv", rec)
        tail_path = write_tail_csv(base / f"seed_{rec.seed}_tail.csv", rec, config.metrics_window)
        entry = {"label": rec.label, "seed": rec.seed, "csv": str(csv_path.relative_to(out)),
                 "tail": str(tail_path.relative_to(out)), "n_updates": list(rec.n_updates)}
        if "n_exchanges" in rec.extra:
            entry["n_exchanges"] = rec.extra["n_exchanges"]
        runs.append(entry)
    manifest = {
        "name": config.name,
        "scenario": config.scenario.value,
        "config": config.to_dict(),
        "config_hash": config.digest(),
        "horizon": config.run_horizon,
        "seeds": config.seeds,
        "equilibrium": eq.to_dict(),
        "grid": [float(v) for v in grid.values],
        "runs": runs,
        "failures": [{"label": l, "seed": s, "error": e} for l, s, e in failures],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
