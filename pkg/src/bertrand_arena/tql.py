"""Tabular Q-learning with exponentially decaying epsilon-greedy exploration."""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mdp import Audience, Info, StateSpec, state_space_size

# above this many entries the table is stored sparsely, one row per visited state
DENSE_LIMIT = 1 << 24


@dataclass(frozen=True)
class TqlConfig:
    """Tabular Q-learning settings.

    ``beta=None`` derives the decay from the run horizon (see
    :func:`default_beta`).
    """

    alpha: float = 0.1
    gamma: float = 0.95
    beta: float | None = None
    q_init: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 <= self.gamma < 1:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.beta is not None and self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")


def default_beta(horizon: int, final_eps: float = 1e-3) -> float:
    """Decay rate that brings epsilon down to ``final_eps`` halfway through ``horizon``."""
    return math.log(1.0 / final_eps) / (horizon / 2.0)


def epsilon_at(beta: float, t: int) -> float:
    return math.exp(-beta * t)


class QTable:
    """``n_states x m`` action values, dense or lazily allocated per state."""

    def __init__(self, n_states: int, m: int, q_init: float = 0.0, dense: bool | None = None):
        self.n_states, self.m, self.q_init = int(n_states), int(m), float(q_init)
        self.dense = (n_states * m <= DENSE_LIMIT) if dense is None else dense
        if self.dense:
            self.values = np.full((n_states, m), self.q_init)
        else:
            self.rows: dict[int, np.ndarray] = {}

    def row(self, s: int) -> np.ndarray:
        if self.dense:
            return self.values[s]
        r = self.rows.get(s)
        if r is None:
            r = self.rows[s] = np.full(self.m, self.q_init)
        return r

    def peek(self, s: int) -> np.ndarray:
        """Row lookup that never allocates."""
        if self.dense:
            return self.values[s]
        r = self.rows.get(s)
        return r if r is not None else np.full(self.m, self.q_init)

    def to_dense(self) -> np.ndarray:
        if self.dense:
            return self.values.copy()
        out = np.full((self.n_states, self.m), self.q_init)
        for s, r in self.rows.items():
            out[s] = r
        return out

    def digest(self) -> str:
        h = hashlib.sha256()
        if self.dense:
            h.update(self.values.tobytes())
        else:
            for s in sorted(self.rows):
                h.update(struct.pack("<Q", s))
                h.update(self.rows[s].tobytes())
        return h.hexdigest()


class TqlAgent:
    audience = Audience.TABULAR
    one_hot = False

    def __init__(self, n_states: int, m: int, config: TqlConfig, rng: np.random.Generator,
                 beta: float | None = None):
        self.config = config
        self.m = m
        self.q = QTable(n_states, m, config.q_init)
        self.beta = config.beta if config.beta is not None else beta
        if self.beta is None:
            raise ValueError("beta must come from the config or from the run horizon")
        self.rng = rng
        self.n_updates = 0

    def epsilon(self, t: int) -> float:
        return epsilon_at(self.beta, t)

    def act(self, state: int, t: int, epsilon: float | None = None) -> int:
        eps = self.epsilon(t) if epsilon is None else epsilon
        if self.rng.random() < eps:
            return int(self.rng.integers(self.m))
        return int(np.argmax(self.q.peek(state)))

    def update(self, s: int, a: int, r: float, s_next: int) -> None:
        cfg = self.config
        target = r + cfg.gamma * self.q.peek(s_next).max()
        row = self.q.row(s)
        row[a] = (1.0 - cfg.alpha) * row[a] + cfg.alpha * target
        self.n_updates += 1

    def observe(self, s, a, r, s_next, t) -> None:
        self.update(s, a, r, s_next)

    def freeze(self) -> "GreedyPolicy":
        return GreedyPolicy(self.q)


class GreedyPolicy:
    """Frozen TQL agent: argmax of a fixed Q-table, never updated."""

    learns = False
    audience = Audience.TABULAR
    one_hot = False

    def __init__(self, q: QTable):
        self.q = q
        self._cache: dict[int, int] = {}
        if q.dense:
            self.actions = np.argmax(q.values, axis=1)

    def act(self, state: int, t: int = 0) -> int:
        if self.q.dense:
            return int(self.actions[state])
        a = self._cache.get(state)
        if a is None:
            a = self._cache[state] = int(np.argmax(self.q.peek(state)))
        return a

    def observe(self, *args) -> None:
        pass


# -- persistence -------------------------------------------------------------

_MAGIC = b"QTAB"
_HEADER = struct.Struct("<4sIQII")


def save_qtable(path, q: QTable, state_spec: StateSpec) -> Path:
    """Header ``(magic, m, n_states, memory_len, info)`` then row-major float64."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    info = 0 if state_spec.info is Info.FULL else 1
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, q.m, q.n_states, state_spec.memory_len, info))
        fh.write(q.to_dense().astype("<f8").tobytes())
    return path


def load_qtable(path) -> tuple[QTable, StateSpec]:
    raw = Path(path).read_bytes()
    magic, m, n_states, memory_len, info = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path} is not a Q-table file")
    spec = StateSpec(memory_len, Info.FULL if info == 0 else Info.SELF)
    if state_space_size(spec, m) != n_states:
        raise ValueError(f"header inconsistent: {n_states} states for m={m}, {spec}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if values.size != n_states * m:
        raise ValueError(f"expected {n_states * m} values, found {values.size}")
    q = QTable(n_states, m, dense=True)
    q.values[:] = values.reshape(n_states, m)
    return q, spec
