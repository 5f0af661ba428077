import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bertrand_arena.nn import Mlp
from bertrand_arena.ppo import (EmptyBufferError, PpoAgent, PpoConfig, advantages, clipped_objective_term,
                                clipped_policy_loss, rewards_to_go)
from oracles import central_diff, clipped_surrogate, max_rel_error, normalized_advantages, rewards_to_go_sum


def make(seed=0, state_dim=2, m=3, **kw):
    kw.setdefault("hidden", (8,))
    kw.setdefault("rollout_len", 20)
    kw.setdefault("minibatch_size", 10)
    return PpoAgent(state_dim, m, PpoConfig(**kw), np.random.default_rng(seed))


class TestRewardsToGo:
    def test_examples(self):
        assert rewards_to_go([1, 2, 3], 1.0, 0.0).tolist() == [6, 5, 3]
        assert rewards_to_go([1], 0.5, 4.0).tolist() == [3.0]

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 30))
            r, gamma, boot = rng.normal(size=n), float(rng.uniform(0, 1)), float(rng.normal())
            assert np.max(np.abs(rewards_to_go(r, gamma, boot) - rewards_to_go_sum(r, gamma, boot))) <= 1e-12

    def test_empty(self):
        with pytest.raises(ValueError):
            rewards_to_go([], 0.9)


class TestAdvantages:
    def test_perfect_critic_gives_zero(self):
        assert np.all(advantages([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], normalize=False) == 0)

    def test_hand_trace(self):
        # raw advantages [1, 2, 3] - [0, 0, 0]: mean 2, population std sqrt(2/3)
        adv = advantages([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
        s = np.sqrt(2 / 3) + 1e-8
        assert np.allclose(adv, [-1 / s, 0.0, 1 / s], atol=1e-12)

    def test_matches_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            ret, val = rng.normal(size=n), rng.normal(size=n)
            adv = advantages(ret, val)
            assert np.max(np.abs(adv - normalized_advantages(ret, val))) <= 1e-12
            assert abs(adv.mean()) < 1e-9


class TestClip:
    def test_examples(self):
        assert clipped_objective_term(1.5, 1.0, 0.2) == pytest.approx(1.2)
        assert clipped_objective_term(0.5, -1.0, 0.2) == pytest.approx(-0.8)

    @given(st.floats(-10, 10), st.floats(0.01, 0.99))
    def test_identity_ratio(self, adv, clip):
        assert clipped_objective_term(1.0, adv, clip) == adv

    @given(st.floats(0, 50), st.floats(-10, 10), st.floats(0.01, 0.99))
    def test_bounded(self, ratio, adv, clip):
        v = clipped_objective_term(ratio, adv, clip)
        assert v <= (1 + clip) * abs(adv) + 1e-12
        # a large ratio against a negative advantage is never capped below
        assert v >= -(max(ratio, 1 + clip)) * abs(adv) - 1e-12


def random_case(rng, m=4, n=12):
    dims = (3, int(rng.integers(2, 8)), m)
    actor = Mlp(dims, rng)
    states = rng.normal(size=(n, 3))
    actions = rng.integers(m, size=n)
    # old log-probs near the current ones so that both clipped and unclipped samples occur
    logits = actor.forward(states)
    logp = logits - logits.max(axis=1, keepdims=True)
    logp -= np.log(np.exp(logp).sum(axis=1, keepdims=True))
    old = logp[np.arange(n), actions] + rng.normal(scale=0.3, size=n)
    adv = rng.normal(size=n)
    return actor, states, actions, old, adv


class TestPolicyLoss:
    def test_loss_matches_rowwise_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            actor, states, actions, old, adv = random_case(rng)
            loss, _, _ = clipped_policy_loss(actor, states, actions, old, adv, 0.2, 0.05)
            want = clipped_surrogate(actor.forward(states), actions, old, adv, 0.2, 0.05)
            assert loss == pytest.approx(want, abs=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            actor, states, actions, old, adv = random_case(rng)
            _, grad, _ = clipped_policy_loss(actor, states, actions, old, adv, 0.2, 0.05)

            def f(flat):
                probe = Mlp(actor.dims)
                probe.params[:] = flat
                return clipped_policy_loss(probe, states, actions, old, adv, 0.2, 0.05)[0]

            assert max_rel_error(grad, central_diff(f, actor.params)) <= 1e-4, trial

    def test_first_pass_ratio_is_one(self):
        agent = make(rollout_len=50, minibatch_size=50)
        rng = np.random.default_rng(0)
        states = rng.normal(size=(50, 2))
        acts, logps = [], []
        for s in states:
            a, lp, _ = agent.act_full(s)
            acts.append(a)
            logps.append(lp)
        adv = rng.normal(size=50)
        loss, _, _ = clipped_policy_loss(agent.actor, states, np.array(acts), np.array(logps), adv, 0.2, 0.0)
        assert loss == pytest.approx(-adv.mean(), abs=1e-12)


class TestUpdate:
    def collect(self, agent, n, seed=0):
        rng = np.random.default_rng(seed)
        out = None
        for t in range(n):
            s = rng.normal(size=2)
            a = agent.act(s, t)
            out = agent.observe(s, a, float(rng.normal()), rng.normal(size=2), t)
        return out

    def test_zero_learning_rate_keeps_parameters(self):
        agent = make(actor_lr=0.0, critic_lr=0.0)
        before = agent.export_weights()
        stats = self.collect(agent, 20)
        assert stats is not None and agent.n_updates == 1
        after = agent.export_weights()
        assert all(np.array_equal(before[k], after[k]) for k in before)

    def test_zero_advantage_zero_entropy_keeps_policy(self):
        # with gamma=0 and every reward equal to the critic's estimate, R - V is exactly 0
        agent = make(entropy_coef=0.0, normalize_advantages=False, gamma=0.0)
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = rng.normal(size=2)
            a, logp, value = agent.act_full(s)
            agent.buffer.add(s, a, logp, value, value)
        before = agent.actor.params.copy()
        agent.update()
        assert np.array_equal(agent.actor.params, before)

    def test_update_only_at_rollout_boundary(self):
        agent = make(rollout_len=20, minibatch_size=5)
        assert self.collect(agent, 19) is None and agent.n_updates == 0
        assert len(agent.buffer) == 19

    def test_empty_buffer(self):
        with pytest.raises(EmptyBufferError):
            make().update()

    def test_seeded_determinism(self):
        a, b = make(seed=5), make(seed=5)
        self.collect(a, 40)
        self.collect(b, 40)
        assert np.array_equal(a.actor.params, b.actor.params)

    def test_observe_requires_act(self):
        agent = make()
        agent.act(np.zeros(2))
        with pytest.raises(RuntimeError):
            agent.observe(np.zeros(2), (agent._pending[0] + 1) % 3, 0.0, np.zeros(2))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PpoConfig(clip=1.0)
        with pytest.raises(ValueError):
            PpoConfig(rollout_len=10, minibatch_size=20)


def test_dominant_logit_sampling():
    agent = make(m=3)
    agent.actor.params[:] = 0.0
    agent.actor.biases[-1][:] = [0.0, np.log(9.0), 0.0]  # probabilities 0.09, 0.82, 0.09
    rng_counts = np.bincount([agent.act(np.zeros(2)) for _ in range(10_000)], minlength=3) / 10_000
    assert rng_counts[1] == pytest.approx(9 / 11, abs=0.02)
    assert agent.policy(np.zeros(2)).probs.sum() == pytest.approx(1.0)


def test_two_armed_bandit():
    successes = 0
    for seed in range(10):
        agent = make(seed=seed, state_dim=1, m=2, rollout_len=100, minibatch_size=50,
                     actor_lr=1e-3, gamma=0.0, hidden=(16,))
        s = np.ones(1)  # constant observation; a zero input would silence every ReLU unit
        for t in range(50 * 100):
            a = agent.act(s, t)
            agent.observe(s, a, 1.0 if a == 0 else 0.0, s, t)
        successes += agent.policy(s).probs[0] > 0.95
    assert successes >= 9


def test_weights_roundtrip(tmp_path):
    src, dst = make(seed=1), make(seed=2)
    src.save(tmp_path / "ppo")
    dst.load(tmp_path / "ppo")
    assert all(np.array_equal(src.export_weights()[k], dst.export_weights()[k]) for k in ("actor", "critic"))
    states = np.random.default_rng(0).normal(size=(30, 2))
    frozen = src.frozen()
    assert all(frozen.act(x) == src.greedy(x) for x in states)
