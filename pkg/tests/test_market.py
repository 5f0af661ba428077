import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bertrand_arena.market import (InvalidParameterError, MarketKind, MarketSpec, PriceDomainError, demand,
                                   joint_profit, profit, profit_surface, write_surface_csv)

STANDARD = MarketSpec.standard()
EDGEWORTH = MarketSpec.edgeworth(k=0.6)
LOGIT = MarketSpec.logit(c=1.0, g=2.0, mu=0.25)

unit = st.floats(0.0, 1.0, allow_nan=False)
logit_price = st.floats(0.5, 3.0, allow_nan=False)


class TestDemand:
    def test_standard_branches(self):
        assert demand(STANDARD, 0.3, 0.5) == pytest.approx(0.7)
        assert demand(STANDARD, 0.4, 0.4) == pytest.approx(0.3)
        assert demand(STANDARD, 0.5, 0.3) == 0.0

    def test_edgeworth_capacity(self):
        assert demand(EDGEWORTH, 0.2, 0.5) == pytest.approx(0.6)
        # below capacity the cap is inactive
        assert demand(EDGEWORTH, 0.5, 0.7) == pytest.approx(0.5)

    def test_edgeworth_tie_is_uncapped_half(self):
        assert demand(EDGEWORTH, 0.1, 0.1) == pytest.approx(0.45)

    def test_logit_symmetric_point(self):
        # independent evaluation of the logit share at p0 = p1 = 1.473
        u = math.exp((2.0 - 1.473) / 0.25)
        expected = u / (2 * u + 1)
        assert demand(LOGIT, 1.473, 1.473) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.4713, abs=1e-4)
        assert (1.473 - 1.0) * expected == pytest.approx(0.223, abs=1e-3)

    def test_logit_extreme_prices_finite(self):
        q = demand(LOGIT, np.array([-500.0, 500.0]), np.array([500.0, -500.0]))
        assert np.all(np.isfinite(q))
        assert q[0] == pytest.approx(1.0) and q[1] == pytest.approx(0.0)

    def test_vectorized_matches_scalar(self):
        p = np.linspace(0, 1, 7)
        vec = demand(STANDARD, p[:, None], p[None, :])
        for i, a in enumerate(p):
            for j, b in enumerate(p):
                assert vec[i, j] == demand(STANDARD, a, b)

    def test_tie_tolerance(self):
        assert demand(STANDARD, 0.4, 0.4 + 1e-13) == pytest.approx(0.3)
        assert demand(STANDARD, 0.4, 0.4 + 1e-13, tie_tol=0.0) == pytest.approx(0.6)


class TestProfit:
    def test_standard_monopoly_split(self):
        assert profit(STANDARD, 0.5, 0.5) == pytest.approx(0.125)

    def test_logit_monopoly_point(self):
        assert profit(LOGIT, 1.925, 1.925) == pytest.approx(0.337, abs=1e-3)

    @pytest.mark.parametrize("spec", [STANDARD, EDGEWORTH, LOGIT])
    def test_zero_margin(self, spec):
        assert profit(spec, spec.c, 0.9 if spec.kind is not MarketKind.LOGIT else 1.7) == 0.0

    def test_negative_below_cost(self):
        assert profit(MarketSpec.standard(c=0.2), 0.1, 0.5) < 0

    def test_joint(self):
        assert joint_profit(STANDARD, 0.5, 0.5) == pytest.approx(0.25)
        assert joint_profit(LOGIT, 1.925, 1.925) == pytest.approx(2 * profit(LOGIT, 1.925, 1.925))
        assert joint_profit(LOGIT, 1.925, 1.925) == pytest.approx(0.675, abs=1e-3)
        assert joint_profit(STANDARD, 0.0, 0.0) == 0.0


class TestValidation:
    def test_edgeworth_needs_large_capacity(self):
        with pytest.raises(InvalidParameterError):
            MarketSpec.edgeworth(k=0.5)

    def test_logit_needs_positive_mu(self):
        with pytest.raises(InvalidParameterError):
            MarketSpec.logit(mu=0.0)

    def test_cost_bounds(self):
        with pytest.raises(InvalidParameterError):
            MarketSpec.standard(c=-0.1)
        with pytest.raises(InvalidParameterError):
            MarketSpec.standard(c=1.0)

    def test_price_band(self):
        with pytest.raises(PriceDomainError):
            demand(STANDARD, 1.2, 0.5)
        with pytest.raises(PriceDomainError):
            profit(LOGIT, float("nan"), 1.5)

    def test_roundtrip_dict(self):
        for spec in (STANDARD, EDGEWORTH, LOGIT):
            assert MarketSpec.from_dict(spec.to_dict()) == spec


class TestProperties:
    @given(logit_price, logit_price)
    def test_logit_shares_leave_room_for_outside_option(self, a, b):
        d0, d1 = demand(LOGIT, a, b), demand(LOGIT, b, a)
        assert 0 < d0 < 1 and 0 < d1 < 1
        assert d0 + d1 < 1

    @given(logit_price, logit_price, st.floats(0.01, 0.5))
    def test_logit_monotone(self, a, b, h):
        assert demand(LOGIT, a + h, b) < demand(LOGIT, a, b)
        assert demand(LOGIT, a, b + h) > demand(LOGIT, a, b)

    @given(unit, unit)
    def test_cheaper_firm_takes_the_market(self, a, b):
        for spec in (STANDARD, EDGEWORTH):
            d_ab, d_ba = demand(spec, a, b), demand(spec, b, a)
            if abs(a - b) > 1e-12:
                assert (d_ab > 0) + (d_ba > 0) <= 1
            else:
                assert d_ab == d_ba == pytest.approx(0.5 * (1 - a), abs=1e-12)

    @given(unit, unit)
    def test_edgeworth_bounded_by_capacity(self, a, b):
        assert demand(EDGEWORTH, a, b) <= EDGEWORTH.k + 1e-15
        if 1 - a <= EDGEWORTH.k:
            assert demand(EDGEWORTH, a, b) == demand(STANDARD, a, b)


class TestSurface:
    def test_corners(self):
        rows = profit_surface(STANDARD, 2)
        assert rows.shape == (4, 3)
        assert {(r[0], r[1]) for r in rows} == {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)}

    @pytest.mark.parametrize("spec", [STANDARD, EDGEWORTH, LOGIT])
    def test_cardinality(self, spec):
        assert len(profit_surface(spec, 7)) == 49

    def test_undercut_row(self):
        rows = profit_surface(STANDARD, 3)
        row = rows[(rows[:, 0] == 0.5) & (rows[:, 1] == 1.0)][0]
        assert row[2] == pytest.approx(0.25)

    def test_row_major(self):
        rows = profit_surface(STANDARD, 3)
        assert list(rows[:3, 0]) == [0.0, 0.0, 0.0]
        assert list(rows[:3, 1]) == [0.0, 0.5, 1.0]

    def test_logit_band_is_relaxed_equilibrium_band(self):
        rows = profit_surface(LOGIT, 5)
        assert rows[0, 0] == pytest.approx(1.473 - 0.1 * 0.452, abs=2e-3)
        assert rows[-1, 0] == pytest.approx(1.925 + 0.1 * 0.452, abs=2e-3)

    def test_resolution_validated(self):
        with pytest.raises(InvalidParameterError):
            profit_surface(STANDARD, 1)

    def test_csv(self, tmp_path):
        path = write_surface_csv(tmp_path / "s.csv", profit_surface(LOGIT, 3))
        text = path.read_bytes()
        assert b"\r" not in text
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["p0", "p1", "profit0"]
        assert len(rows) == 10
        assert all(len(v.replace("-", "").replace(".", "").lstrip("0")) <= 9 for r in rows[1:] for v in r)
