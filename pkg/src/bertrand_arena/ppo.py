"""PPO-Clip over a discrete price grid with separate actor and critic networks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import Audience
from .nn import HIDDEN, Adam, Categorical, Mlp, log_softmax, load_networks, save_networks


class EmptyBufferError(RuntimeError):
    pass


@dataclass(frozen=True)
class PpoConfig:
    clip: float = 0.2
    gamma: float = 0.99
    rollout_len: int = 1000
    update_epochs: int = 4
    minibatch_size: int = 250
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    normalize_advantages: bool = True
    hidden: tuple = HIDDEN
    one_hot: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if not 0 < self.clip < 1:
            raise ValueError(f"clip must be in (0, 1), got {self.clip}")
        if self.rollout_len < self.minibatch_size:
            raise ValueError("rollout_len must be >= minibatch_size")


class RolloutBuffer:
    def __init__(self):
        self.clear()

    def clear(self) -> None:
        self.states, self.actions, self.log_probs, self.rewards, self.values = [], [], [], [], []

    def __len__(self):
        return len(self.actions)

    def add(self, state, action, log_prob, reward, value) -> None:
        self.states.append(state)
        self.actions.append(action)
        self.log_probs.append(log_prob)
        self.rewards.append(reward)
        self.values.append(value)

    def arrays(self):
        return (np.asarray(self.states, dtype=float), np.asarray(self.actions, dtype=np.int64),
                np.asarray(self.log_probs), np.asarray(self.rewards), np.asarray(self.values))


def rewards_to_go(rewards, gamma: float, bootstrap_value: float = 0.0) -> np.ndarray:
    """Discounted tail sums, closed with ``gamma**(n - t) * bootstrap_value``."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        raise ValueError("rewards must be non-empty")
    out = np.empty_like(rewards)
    acc = bootstrap_value
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def advantages(returns, values, normalize: bool = True) -> np.ndarray:
    adv = np.asarray(returns, dtype=float) - np.asarray(values, dtype=float)
    if normalize:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    return adv


def clipped_objective_term(ratio, advantage, clip: float):
    return np.minimum(ratio * advantage, np.clip(ratio, 1.0 - clip, 1.0 + clip) * advantage)


def clipped_policy_loss(actor: Mlp, states, actions, old_log_probs, adv, clip: float, entropy_coef: float):
    """Negative mean clipped surrogate minus the entropy bonus, with its gradient.

    Returns ``(loss, flat_grad, mean_entropy)``.
    """
    logits, cache = actor.forward_cached(states)
    logp_all = log_softmax(logits)
    probs = np.exp(logp_all)
    n = len(actions)
    rows = np.arange(n)
    logp = logp_all[rows, actions]
    ratio = np.exp(logp - old_log_probs)
    surrogate = clipped_objective_term(ratio, adv, clip)
    ent = -(probs * logp_all).sum(axis=1)
    loss = -surrogate.mean() - entropy_coef * ent.mean()

    # d surrogate / d logp is ratio*A where the unclipped branch is the active minimum
    clipped = ((adv > 0) & (ratio > 1.0 + clip)) | ((adv < 0) & (ratio < 1.0 - clip))
    coef = np.where(clipped, 0.0, ratio * adv)
    one_hot = np.zeros_like(probs)
    one_hot[rows, actions] = 1.0
    d_surr = coef[:, None] * (one_hot - probs)
    d_ent = -probs * (logp_all + ent[:, None])
    grad_logits = -(d_surr + entropy_coef * d_ent) / n
    return float(loss), actor.backward(cache, grad_logits), float(ent.mean())


def value_loss(critic: Mlp, states, returns, value_coef: float):
    v, cache = critic.forward_cached(states)
    err = v[:, 0] - returns
    grad = np.zeros_like(v)
    grad[:, 0] = value_coef * 2.0 * err / len(returns)
    return float(value_coef * np.mean(err * err)), critic.backward(cache, grad)


class PpoAgent:
    learns = True
    audience = Audience.NEURAL

    def __init__(self, state_dim: int, m: int, config: PpoConfig, rng: np.random.Generator):
        self.config = config
        self.m = m
        self.rng = rng
        self.actor = Mlp((state_dim, *config.hidden, m), rng, out_scale=0.01)
        self.critic = Mlp((state_dim, *config.hidden, 1), rng)
        self.actor_opt = Adam(self.actor.n_params, lr=config.actor_lr)
        self.critic_opt = Adam(self.critic.n_params, lr=config.critic_lr)
        self.buffer = RolloutBuffer()
        self._pending = None
        self.n_updates = 0
        self.last_stats = None
        self.one_hot = config.one_hot

    def policy(self, state) -> Categorical:
        return Categorical(self.actor.forward(state))

    def value(self, state) -> float:
        return float(self.critic.forward(state)[0])

    def act(self, state, t: int = 0) -> int:
        dist = self.policy(state)
        a = dist.sample(self.rng)
        self._pending = (a, float(dist.log_probs[a]), self.value(state))
        return a

    def act_full(self, state):
        """``(action, log_prob, value)`` for ``state``."""
        self.act(state)
        return self._pending

    def greedy(self, state) -> int:
        return int(np.argmax(self.actor.forward(state)))

    def observe(self, s, a, r, s_next, t: int = 0):
        a_taken, log_prob, value = self._pending
        if a_taken != a:
            raise RuntimeError("observe() must follow act() for the same action")
        self.buffer.add(s, a, log_prob, r, value)
        self._pending = None
        if len(self.buffer) >= self.config.rollout_len:
            return self.update(bootstrap_value=self.value(s_next))
        return None

    def update(self, bootstrap_value: float = 0.0) -> dict:
        if len(self.buffer) == 0:
            raise EmptyBufferError("nothing collected")
        cfg = self.config
        states, actions, old_logp, rewards, values = self.buffer.arrays()
        returns = rewards_to_go(rewards, cfg.gamma, bootstrap_value)
        adv = advantages(returns, values, cfg.normalize_advantages)
        n = len(actions)
        stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0}
        batches = 0
        for _ in range(cfg.update_epochs):
            order = self.rng.permutation(n)
            for start in range(0, n, cfg.minibatch_size):
                mb = order[start:start + cfg.minibatch_size]
                pl, pg, ent = clipped_policy_loss(self.actor, states[mb], actions[mb], old_logp[mb],
                                                  adv[mb], cfg.clip, cfg.entropy_coef)
                self.actor_opt.step(self.actor.params, pg)
                vl, vg = value_loss(self.critic, states[mb], returns[mb], cfg.value_coef)
                self.critic_opt.step(self.critic.params, vg)
                stats["policy_loss"] += pl
                stats["value_loss"] += vl
                stats["entropy"] += ent
                batches += 1
        self.buffer.clear()
        self.n_updates += 1
        self.last_stats = {k: v / batches for k, v in stats.items()}
        return self.last_stats

    def export_weights(self) -> dict[str, np.ndarray]:
        return {"actor": self.actor.params.copy(), "critic": self.critic.params.copy()}

    def import_weights(self, weights: dict) -> None:
        self.actor.load(weights["actor"])
        self.critic.load(weights["critic"])

    def save(self, path):
        return save_networks(path, {"actor": self.actor, "critic": self.critic})

    def load(self, path) -> None:
        nets = load_networks(path)
        self.import_weights({k: v.params for k, v in nets.items()})

    def frozen(self) -> "GreedyPolicyNet":
        return GreedyPolicyNet(self.actor.copy(), self.one_hot)


class GreedyPolicyNet:
    """Non-learning player taking the mode of a copied policy network."""

    learns = False
    audience = Audience.NEURAL

    def __init__(self, actor: Mlp, one_hot: bool = False):
        self.net = actor
        self.one_hot = one_hot

    def act(self, state, t: int = 0) -> int:
        return int(np.argmax(self.net.forward(state)))

    def load(self, flat) -> None:
        self.net.load(flat)

    def observe(self, *args) -> None:
        pass
