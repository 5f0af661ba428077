"""Repeated pricing game: discrete price grid, state memory, simultaneous steps."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .equilibrium import EquilibriumReport
from .market import InvalidParameterError, MarketKind, MarketSpec, profit_matrix


class Info(str, Enum):
    FULL = "full"
    SELF = "self"


class Audience(str, Enum):
    TABULAR = "tabular"
    NEURAL = "neural"


@dataclass(frozen=True)
class PriceGrid:
    m: int
    lower: float
    upper: float
    values: np.ndarray = field(repr=False, compare=False)

    @property
    def step(self) -> float:
        return (self.upper - self.lower) / (self.m - 1)

    def index_of(self, price: float) -> int:
        return int(np.argmin(np.abs(self.values - price)))


def build_grid(spec: MarketSpec, eq: EquilibriumReport, m: int = 15, zeta: float = 0.1) -> PriceGrid:
    """``m`` equidistant prices on [0, 1], or on the Nash-monopoly band widened
    by ``zeta`` times its width on each side for the Logit model."""
    if m < 2:
        raise InvalidParameterError(f"m must be >= 2, got {m}")
    if zeta < 0:
        raise InvalidParameterError(f"zeta must be >= 0, got {zeta}")
    if spec.kind is MarketKind.LOGIT:
        width = eq.p_monopoly - eq.p_nash
        lower, upper = eq.p_nash - zeta * width, eq.p_monopoly + zeta * width
    else:
        lower, upper = 0.0, 1.0
    values = lower + np.arange(m) * ((upper - lower) / (m - 1))
    values[-1] = upper
    return PriceGrid(int(m), float(lower), float(upper), values)


@dataclass(frozen=True)
class StateSpec:
    memory_len: int = 1
    info: Info = Info.FULL

    def __post_init__(self):
        object.__setattr__(self, "info", Info(self.info))
        if self.memory_len < 1:
            raise InvalidParameterError(f"memory_len must be >= 1, got {self.memory_len}")

    @property
    def n_slots(self) -> int:
        return self.memory_len * (2 if self.info is Info.FULL else 1)

    @property
    def label(self) -> str:
        prefix = "k" if self.info is Info.FULL else "self_k"
        return f"{prefix}{self.memory_len}"


def state_space_size(spec: StateSpec, m: int) -> int:
    return m ** spec.n_slots


def _slots(history: np.ndarray, spec: StateSpec, agent: int) -> np.ndarray:
    """Price indices seen by ``agent``: own slots then opponent slots, newest first.

    ``history[j]`` is the joint decision ``j + 1`` steps ago.
    """
    own = history[:, agent]
    if spec.info is Info.SELF:
        return own
    return np.concatenate([own, history[:, 1 - agent]])


def encode_tabular(history: np.ndarray, spec: StateSpec, agent: int, m: int) -> int:
    """Mixed-radix index, first slot most significant."""
    index = 0
    for digit in _slots(history, spec, agent):
        index = index * m + int(digit)
    return index


def decode_tabular(index: int, spec: StateSpec, agent: int, m: int) -> np.ndarray:
    """Inverse of :func:`encode_tabular`; opponent slots are zero under SELF info."""
    digits = []
    for _ in range(spec.n_slots):
        index, d = divmod(index, m)
        digits.append(d)
    digits = digits[::-1]
    history = np.zeros((spec.memory_len, 2), dtype=np.int64)
    history[:, agent] = digits[: spec.memory_len]
    if spec.info is Info.FULL:
        history[:, 1 - agent] = digits[spec.memory_len:]
    return history


def encode_neural(history: np.ndarray, spec: StateSpec, agent: int, m: int, one_hot: bool = False) -> np.ndarray:
    """Slot prices scaled to [0, 1] (``(p - lower)/(upper - lower) = j/(m-1)``),
    or concatenated one-hot blocks."""
    slots = _slots(history, spec, agent)
    if one_hot:
        out = np.zeros(len(slots) * m)
        out[np.arange(len(slots)) * m + slots] = 1.0
        return out
    return slots / (m - 1.0)


def encode_state(history, spec: StateSpec, audience: Audience, agent: int, m: int, one_hot: bool = False):
    if Audience(audience) is Audience.TABULAR:
        return encode_tabular(history, spec, agent, m)
    return encode_neural(history, spec, agent, m, one_hot)


def neural_input_dim(spec: StateSpec, m: int, one_hot: bool = False) -> int:
    return spec.n_slots * (m if one_hot else 1)


@dataclass
class StepOutcome:
    rewards: tuple[float, float]
    views: tuple


class PricingEnv:
    """Single infinite episode of the repeated duopoly game.

    Args:
        spec: market model.
        grid: shared action grid.
        state_spec: memory length and information set.
        audiences: per-agent encoding (tabular index or neural vector).
        one_hot: neural encodings as one-hot slots instead of scaled prices.
        fixed_start: fill the initial history with this index instead of
            drawing it at random.
    """

    def __init__(self, spec: MarketSpec, grid: PriceGrid, state_spec: StateSpec,
                 audiences=(Audience.TABULAR, Audience.TABULAR), one_hot=(False, False),
                 fixed_start: int | None = None):
        self.spec = spec
        self.grid = grid
        self.state_spec = state_spec
        self.audiences = tuple(Audience(a) for a in audiences)
        self.one_hot = tuple(bool(x) for x in one_hot)
        self.fixed_start = fixed_start
        # reward table; rewards are looked up, never recomputed per step
        self.rewards = profit_matrix(spec, grid.values)
        self.history = np.zeros((state_spec.memory_len, 2), dtype=np.int64)
        self.t = 0

    def view(self, agent: int):
        return encode_state(self.history, self.state_spec, self.audiences[agent], agent,
                            self.grid.m, self.one_hot[agent])

    def views(self) -> tuple:
        return self.view(0), self.view(1)

    def reset(self, rng: np.random.Generator) -> tuple:
        l = self.state_spec.memory_len
        if self.fixed_start is None:
            self.history = rng.integers(0, self.grid.m, size=(l, 2)).astype(np.int64)
        else:
            self.history = np.full((l, 2), int(self.fixed_start), dtype=np.int64)
        self.t = 0
        return self.views()

    def step(self, a0: int, a1: int) -> StepOutcome:
        r0 = float(self.rewards[a0, a1])
        r1 = float(self.rewards[a1, a0])
        if self.state_spec.memory_len > 1:
            self.history[1:] = self.history[:-1]
        self.history[0, 0] = a0
        self.history[0, 1] = a1
        self.t += 1
        return StepOutcome((r0, r1), self.views())
