"""Deep Q-network with experience replay, a target network and an
average-reward (differential) target, or a discounted one."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .mdp import Audience
from .nn import HIDDEN, Adam, Mlp, load_networks, save_networks
from .tql import epsilon_at


class InsufficientDataError(RuntimeError):
    pass


class DqnMode(str, Enum):
    AVERAGE_REWARD = "average_reward"
    DISCOUNTED = "discounted"


@dataclass(frozen=True)
class DqnConfig:
    mode: DqnMode = DqnMode.AVERAGE_REWARD
    lam: float = 0.01
    gamma: float = 0.95
    batch_size: int = 32
    target_sync: int = 1000
    beta: float | None = None
    capacity: int = 10_000
    warmup: int = 1000
    lr: float = 1e-3
    hidden: tuple = HIDDEN
    one_hot: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", DqnMode(self.mode))
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.batch_size > self.capacity:
            raise ValueError("batch_size must not exceed the replay capacity")
        if self.target_sync < 1:
            raise ValueError("target_sync must be >= 1")
        if self.warmup < self.batch_size:
            raise ValueError("warmup must be at least one batch")


class ReplayBuffer:
    """Fixed-capacity FIFO ring of ``(s, a, r, s_next)`` transitions."""

    def __init__(self, capacity: int, state_dim: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, state_dim))
        self.ptr = 0
        self.size = 0

    def __len__(self):
        return self.size

    def store(self, s, a, r, s_next) -> None:
        i = self.ptr
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s_next[i] = s_next
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def oldest(self) -> int:
        """Ring slot of the oldest stored transition."""
        return self.ptr if self.size == self.capacity else 0

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform draw without replacement inside one batch."""
        if self.size < 4 * batch_size:
            return rng.choice(self.size, size=batch_size, replace=False)
        # rejection sampling: a uniform draw conditioned on distinct indices
        while True:
            idx = rng.integers(0, self.size, size=batch_size)
            if np.unique(idx).size == batch_size:
                return idx

    def get(self, idx):
        return self.s[idx], self.a[idx], self.r[idx], self.s_next[idx]


def average_reward_target(r, next_q_max, r_bar):
    return r - r_bar + next_q_max


def discounted_target(r, next_q_max, gamma):
    return r + gamma * next_q_max


class DqnAgent:
    learns = True
    audience = Audience.NEURAL

    def __init__(self, state_dim: int, m: int, config: DqnConfig, rng: np.random.Generator,
                 beta: float | None = None):
        self.config = config
        self.m = m
        self.rng = rng
        self.beta = config.beta if config.beta is not None else beta
        if self.beta is None:
            raise ValueError("beta must come from the config or from the run horizon")
        self.q = Mlp((state_dim, *config.hidden, m), rng)
        self.q_target = self.q.copy()
        self.opt = Adam(self.q.n_params, lr=config.lr)
        self.buffer = ReplayBuffer(config.capacity, state_dim)
        self.r_bar = 0.0
        self.n_updates = 0
        self.n_syncs = 0
        self.one_hot = config.one_hot

    def epsilon(self, t: int) -> float:
        return epsilon_at(self.beta, t)

    def greedy(self, state) -> int:
        return int(np.argmax(self.q.forward(state)))

    def act(self, state, t: int, epsilon: float | None = None) -> int:
        eps = self.epsilon(t) if epsilon is None else epsilon
        if self.rng.random() < eps:
            return int(self.rng.integers(self.m))
        return self.greedy(state)

    def store(self, s, a, r, s_next) -> None:
        self.buffer.store(s, a, r, s_next)

    def targets(self, r, s_next) -> np.ndarray:
        next_max = self.q_target.forward(s_next).max(axis=-1)
        if self.config.mode is DqnMode.AVERAGE_REWARD:
            return average_reward_target(r, next_max, self.r_bar)
        return discounted_target(r, next_max, self.config.gamma)

    def loss_and_grad(self, s, a, y):
        """Mean squared TD error on a batch and its flat parameter gradient."""
        out, cache = self.q.forward_cached(s)
        rows = np.arange(len(a))
        err = out[rows, a] - y
        grad_out = np.zeros_like(out)
        grad_out[rows, a] = 2.0 * err / len(a)
        return float(np.mean(err * err)), self.q.backward(cache, grad_out)

    def train_step(self) -> float:
        if len(self.buffer) < max(self.config.warmup, self.config.batch_size):
            raise InsufficientDataError(
                f"{len(self.buffer)} transitions stored, training needs {self.config.warmup}")
        idx = self.buffer.sample_indices(self.config.batch_size, self.rng)
        s, a, r, s_next = self.buffer.get(idx)
        y = self.targets(r, s_next)
        loss, grad = self.loss_and_grad(s, a, y)
        self.opt.step(self.q.params, grad)
        self.n_updates += 1
        return loss

    def update_r_bar(self, s, a, r, s_next) -> None:
        """Differential-return estimate, moved with the live transition."""
        both = self.q_target.forward(np.stack([s_next, s]))
        q_next, q_now = both[0].max(), both[1, a]
        self.r_bar += self.config.lam * (r - self.r_bar + q_next - q_now)

    def sync_target(self) -> None:
        self.q_target.params[:] = self.q.params
        self.n_syncs += 1

    def observe(self, s, a, r, s_next, t: int) -> float | None:
        """Store the transition, train once if warmed up, then move R-bar and
        sync the target every ``target_sync`` steps (``t`` counts from 0)."""
        self.store(s, a, r, s_next)
        loss = None
        if len(self.buffer) >= self.config.warmup:
            loss = self.train_step()
        if self.config.mode is DqnMode.AVERAGE_REWARD:
            self.update_r_bar(s, a, r, s_next)
        if (t + 1) % self.config.target_sync == 0:
            self.sync_target()
        return loss

    def export_weights(self) -> np.ndarray:
        return self.q.params.copy()

    def import_weights(self, flat) -> None:
        self.q.load(flat)
        self.q_target.load(flat)

    def save(self, path):
        return save_networks(path, {"q": self.q})

    def load(self, path) -> None:
        self.import_weights(load_networks(path)["q"].params)

    def target_digest(self) -> str:
        return hashlib.sha256(self.q_target.params.tobytes()).hexdigest()

    def frozen(self) -> "GreedyQ":
        return GreedyQ(self.q.copy(), self.one_hot)


class GreedyQ:
    """Non-learning argmax player over a copied Q-network."""

    learns = False
    audience = Audience.NEURAL

    def __init__(self, net: Mlp, one_hot: bool = False):
        self.net = net
        self.one_hot = one_hot

    def act(self, state, t: int = 0) -> int:
        return int(np.argmax(self.net.forward(state)))

    def load(self, flat) -> None:
        self.net.load(flat)

    def observe(self, *args) -> None:
        pass
