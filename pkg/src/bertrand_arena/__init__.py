"""Repeated Bertrand pricing games between tabular and deep RL agents.

Typical use::

    from bertrand_arena import MarketSpec, equilibrium_report, ExperimentConfig, run_simulation

    eq = equilibrium_report(MarketSpec.logit())
    rec = run_simulation(ExperimentConfig(horizon=100_000, n_runs=1), seed=0)
"""
from .dqn import DqnAgent, DqnConfig, DqnMode
from .equilibrium import EquilibriumReport, equilibrium_report, monopoly_price, nash_price, \
    verify_no_profitable_deviation
from .harness import (ConfigError, ExperimentConfig, RunRecord, Scenario, build_config, load_config, pretrain_tql,
                      run_all, run_experiment, run_hetero_exchange, run_lr_asymmetry, run_simulation,
                      run_state_space_sweep, run_tql_vs_drl)
from .market import MarketError, MarketKind, MarketSpec, demand, joint_profit, profit, profit_surface
from .mdp import Info, PriceGrid, PricingEnv, StateSpec, build_grid, state_space_size
from .metrics import aggregate, delta, price_heatmap, record_metrics, report, rpdi, window_mean
from .nn import Adam, Mlp
from .ppo import PpoAgent, PpoConfig
from .tql import GreedyPolicy, TqlAgent, TqlConfig

__version__ = "0.1.0"

__all__ = [
    "Adam", "ConfigError", "DqnAgent", "DqnConfig", "DqnMode", "EquilibriumReport", "ExperimentConfig",
    "GreedyPolicy", "Info", "MarketError", "MarketKind", "MarketSpec", "Mlp", "PpoAgent", "PpoConfig", "PriceGrid",
    "PricingEnv", "RunRecord", "Scenario", "StateSpec", "TqlAgent", "TqlConfig", "aggregate", "build_config",
    "build_grid", "delta", "demand", "equilibrium_report", "joint_profit", "load_config", "monopoly_price",
    "nash_price", "pretrain_tql", "price_heatmap", "profit", "profit_surface", "record_metrics", "report", "rpdi",
    "run_all", "run_experiment", "run_hetero_exchange", "run_lr_asymmetry", "run_simulation",
    "run_state_space_sweep", "run_tql_vs_drl", "state_space_size", "verify_no_profitable_deviation", "window_mean",
]
