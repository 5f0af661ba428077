import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bertrand_arena.equilibrium import EquilibriumReport, equilibrium_report
from bertrand_arena.market import MarketSpec
from bertrand_arena.metrics import (DegenerateEquilibriumError, RunMetrics, aggregate, aggregate_runs, boxstats,
                                    delta, pairwise_diff, price_heatmap, rpdi, run_metrics, window_mean,
                                    write_aggregate_json, write_boxstats_csv, write_summary_csv)

EQ = equilibrium_report(MarketSpec.logit())
ROUNDED = EquilibriumReport(1.473, 1.925, 0.223, 0.337)


class TestIdentities:
    def test_endpoints_exact(self):
        assert rpdi(EQ.p_nash, EQ) == 0.0 and rpdi(EQ.p_monopoly, EQ) == 1.0
        assert delta(EQ.pi_nash, EQ) == 0.0 and delta(EQ.pi_monopoly, EQ) == 1.0

    def test_midpoints(self):
        assert rpdi(1.699, ROUNDED) == pytest.approx(0.5, abs=1e-12)
        assert delta(0.280, ROUNDED) == pytest.approx(0.5, abs=1e-12)

    def test_outside_unit_interval_allowed(self):
        assert rpdi(1.4, ROUNDED) < 0 and rpdi(2.0, ROUNDED) > 1

    def test_degenerate(self):
        eq = equilibrium_report(MarketSpec.standard())
        with pytest.raises(DegenerateEquilibriumError):
            delta(0.1, EquilibriumReport(0.0, 0.5, 0.1, 0.1))
        assert rpdi(0.25, eq) == 0.5
        with pytest.raises(DegenerateEquilibriumError):
            rpdi(0.5, EquilibriumReport(0.5, 0.5, 0.0, 0.1))

    @given(st.floats(-10, 10), st.floats(0.1, 10), st.floats(-5, 5))
    def test_affine_invariance(self, shift, scale, price):
        moved = EquilibriumReport(EQ.p_nash * scale + shift, EQ.p_monopoly * scale + shift, 0.0, 1.0)
        assert rpdi(price * scale + shift, moved) == pytest.approx(float(rpdi(price, EQ)), rel=1e-9, abs=1e-9)


class TestWindow:
    def test_constant(self):
        assert window_mean(np.full(50, 0.3), 10) == pytest.approx(0.3)

    def test_short_series(self):
        with pytest.raises(ValueError):
            window_mean(np.ones(5), 10)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=60), st.data())
    def test_slice_oracle(self, values, data):
        w = data.draw(st.integers(1, len(values)))
        tail = values[-w:]
        assert window_mean(values, w) == pytest.approx(sum(tail) / len(tail), rel=1e-9, abs=1e-9)
        assert window_mean(values, len(values)) == pytest.approx(np.mean(values), rel=1e-9, abs=1e-9)

    def test_two_column_series(self):
        series = np.column_stack([np.arange(10.0), np.arange(10.0) * 2])
        assert window_mean(series, 4).tolist() == [7.5, 15.0]


class TestAggregate:
    def test_single_run(self):
        a = aggregate([0.4])
        assert (a.n, a.mean, a.std, a.ci95) == (1, 0.4, 0.0, 0.0)

    def test_identical_runs(self):
        assert aggregate([0.2] * 5).std == 0.0

    def test_hand_trace(self):
        # mean 0.2; deviations -0.1, 0, 0.1 -> sample variance 0.02/2 = 0.01
        a = aggregate([0.1, 0.2, 0.3])
        assert a.mean == pytest.approx(0.2)
        assert a.std == pytest.approx(0.1)
        assert a.ci95 == pytest.approx(1.96 * 0.1 / np.sqrt(3))

    def test_groups_and_pairwise(self):
        runs = [RunMetrics("a", s, (0, 0), (0, 0), (0.5 + s, 0.5), (0.1, 0.3)) for s in range(3)]
        agg = aggregate_runs(runs)
        assert agg["a"][0]["rpdi"].mean == pytest.approx(1.5)
        diffs = pairwise_diff(runs)
        assert [d["rpdi_diff"] for d in diffs] == [0.0, 1.0, 2.0]
        assert all(d["delta_diff"] == pytest.approx(-0.2) for d in diffs)

    def test_symmetric_runs_zero_diff(self):
        assert pairwise_diff([RunMetrics("x", 0, (1, 1), (1, 1), (0.3, 0.3), (0.2, 0.2))])[0]["rpdi_diff"] == 0

    def test_run_metrics(self):
        prices = np.tile([EQ.p_monopoly, EQ.p_nash], (20, 1))
        profits = np.tile([EQ.pi_monopoly, EQ.pi_nash], (20, 1))
        m = run_metrics("x", 0, prices, profits, EQ, 10)
        assert m.rpdi == pytest.approx((1.0, 0.0), abs=1e-12)
        assert m.delta == pytest.approx((1.0, 0.0), abs=1e-12)


class TestHeatmap:
    def test_counting_oracle(self):
        rng = np.random.default_rng(0)
        windows = [rng.integers(5, size=(37, 2)) for _ in range(3)]
        heat = price_heatmap(windows, 5)
        for agent in (0, 1):
            col = [int(w[i, agent]) for w in windows for i in range(len(w))]
            expected = [col.count(j) / len(col) for j in range(5)]
            assert np.allclose(heat[agent], expected, atol=1e-15)
        assert np.all(np.abs(heat.sum(axis=1) - 1) <= 1e-12)

    def test_constant_run(self):
        heat = price_heatmap([np.full((10, 2), 3)], 6)
        assert heat[0, 3] == 1.0 and heat[1].sum() == 1.0 and np.count_nonzero(heat) == 2

    def test_empty(self):
        with pytest.raises(ValueError):
            price_heatmap([np.zeros((0, 2), dtype=int)], 3)


def test_boxstats():
    b = boxstats([1, 2, 3, 4, 5])
    assert b == {"min": 1.0, "q1": 2.0, "median": 3.0, "q3": 4.0, "max": 5.0}


def test_writers(tmp_path):
    runs = [RunMetrics("g", s, (1.6, 1.7), (0.25, 0.26), (0.3, 0.4), (0.2, 0.3)) for s in range(2)]
    text = write_summary_csv(tmp_path / "s.csv", runs, "homogeneous", "logit").read_text()
    assert text.splitlines()[0] == "scenario,market,agent,run_seed,rpdi,delta"
    assert text.splitlines()[1] == "homogeneous,logit,g:0,0,0.3,0.2"
    body = json.loads(write_aggregate_json(tmp_path / "a.json", runs, EQ).read_text())
    assert body["groups"]["g"]["1"]["rpdi"]["mean"] == pytest.approx(0.4)
    assert body["pairwise"]["g"]["rpdi_diff"]["mean"] == pytest.approx(-0.1)
    rows = write_boxstats_csv(tmp_path / "b.csv", runs).read_text().splitlines()
    assert rows[0] == "group,metric,min,q1,median,q3,max" and len(rows) == 1 + 6
