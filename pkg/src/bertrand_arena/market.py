"""Demand and profit for the three duopoly market models.

Standard Bertrand: homogeneous goods, total demand ``d(p) = 1 - p``, the
cheaper firm takes everything and ties split the market.

Bertrand-Edgeworth: as Standard, but the winning firm can serve at most
``k`` units.

Logit: differentiated goods with an outside option,
``d_i = exp((g - p_i)/mu) / (exp((g - p_0)/mu) + exp((g - p_1)/mu) + 1)``.

All functions broadcast over numpy arrays and return plain floats for scalar
input.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np


class MarketError(ValueError):
    """Base class for market-model errors."""


class InvalidParameterError(MarketError):
    pass


class PriceDomainError(MarketError):
    pass


class MarketKind(str, Enum):
    STANDARD = "standard"
    EDGEWORTH = "edgeworth"
    LOGIT = "logit"


TIE_TOL = 1e-12


@dataclass(frozen=True)
class MarketSpec:
    """Demand model plus its economic parameters.

    ``g`` and ``mu`` are only read by the Logit model, ``k`` only by
    Edgeworth.
    """

    kind: MarketKind = MarketKind.STANDARD
    c: float = 0.0
    g: float = 2.0
    mu: float = 0.25
    k: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "kind", MarketKind(self.kind))
        for name in ("c", "g", "mu", "k"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.c < 0:
            raise InvalidParameterError(f"marginal cost c must be >= 0, got {self.c}")
        if self.kind is MarketKind.LOGIT:
            if self.mu <= 0:
                raise InvalidParameterError(f"mu must be > 0 for the logit model, got {self.mu}")
        else:
            if self.c >= 1:
                raise InvalidParameterError(f"c must be < 1 when prices live in [0, 1], got {self.c}")
            if self.kind is MarketKind.EDGEWORTH and self.k <= 0.5:
                raise InvalidParameterError(f"capacity k must be > 0.5, got {self.k}")

    @classmethod
    def standard(cls, c: float = 0.0) -> "MarketSpec":
        return cls(MarketKind.STANDARD, c=c)

    @classmethod
    def edgeworth(cls, c: float = 0.0, k: float = 0.6) -> "MarketSpec":
        return cls(MarketKind.EDGEWORTH, c=c, k=k)

    @classmethod
    def logit(cls, c: float = 1.0, g: float = 2.0, mu: float = 0.25) -> "MarketSpec":
        return cls(MarketKind.LOGIT, c=c, g=g, mu=mu)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "c": self.c}
        if self.kind is MarketKind.LOGIT:
            out.update(g=self.g, mu=self.mu)
        elif self.kind is MarketKind.EDGEWORTH:
            out["k"] = self.k
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MarketSpec":
        return cls(**d)


def _check_prices(spec: MarketSpec, *prices):
    for p in prices:
        p = np.asarray(p, dtype=float)
        if not np.all(np.isfinite(p)):
            raise PriceDomainError("prices must be finite")
        if spec.kind is not MarketKind.LOGIT and (np.any(p < 0) or np.any(p > 1)):
            raise PriceDomainError(f"{spec.kind.value} prices must lie in [0, 1]")


def _scalarize(x):
    return float(x) if np.ndim(x) == 0 else x


def demand(spec: MarketSpec, own_price, opp_price, tie_tol: float = TIE_TOL):
    """Quantity sold by the firm charging ``own_price``.

    Exact grid prices tie exactly; ``tie_tol`` only matters for prices coming
    from continuous computations.
    """
    _check_prices(spec, own_price, opp_price)
    own = np.asarray(own_price, dtype=float)
    opp = np.asarray(opp_price, dtype=float)

    if spec.kind is MarketKind.LOGIT:
        u_own = (spec.g - own) / spec.mu
        u_opp = (spec.g - opp) / spec.mu
        # shift by the largest utility (outside option has utility 0)
        top = np.maximum(np.maximum(u_own, u_opp), 0.0)
        e_own = np.exp(u_own - top)
        q = e_own / (e_own + np.exp(u_opp - top) + np.exp(-top))
        return _scalarize(q)

    full = np.clip(1.0 - own, 0.0, 1.0)
    winner = full if spec.kind is MarketKind.STANDARD else np.minimum(spec.k, full)
    tie = np.abs(own - opp) <= tie_tol
    q = np.where(tie, 0.5 * full, np.where(own < opp, winner, 0.0))
    return _scalarize(q)


def profit(spec: MarketSpec, own_price, opp_price, tie_tol: float = TIE_TOL):
    """Per-firm profit ``(own_price - c) * demand``; negative below cost."""
    q = demand(spec, own_price, opp_price, tie_tol)
    return _scalarize((np.asarray(own_price, dtype=float) - spec.c) * q)


def joint_profit(spec: MarketSpec, p0, p1, tie_tol: float = TIE_TOL):
    return _scalarize(np.asarray(profit(spec, p0, p1, tie_tol)) + np.asarray(profit(spec, p1, p0, tie_tol)))


def profit_matrix(spec: MarketSpec, prices) -> np.ndarray:
    """``M[i, j]`` = profit of a firm pricing ``prices[i]`` against ``prices[j]``."""
    prices = np.asarray(prices, dtype=float)
    return np.asarray(profit(spec, prices[:, None], prices[None, :]))


def default_band(spec: MarketSpec, zeta: float = 0.1) -> tuple[float, float]:
    """Admissible price band: [0, 1], or the relaxed Nash-monopoly band for Logit."""
    if spec.kind is not MarketKind.LOGIT:
        return 0.0, 1.0
    from .equilibrium import equilibrium_report

    eq = equilibrium_report(spec)
    width = eq.p_monopoly - eq.p_nash
    return eq.p_nash - zeta * width, eq.p_monopoly + zeta * width


def profit_surface(spec: MarketSpec, resolution: int, band: tuple[float, float] | None = None) -> np.ndarray:
    """Firm 0's profit on a ``resolution x resolution`` price grid.

    Returns an array of shape ``(resolution**2, 3)`` with columns
    ``p0, p1, profit0``, row-major in ``p0``.
    """
    resolution = int(resolution)
    if resolution < 2:
        raise InvalidParameterError(f"resolution must be >= 2, got {resolution}")
    lo, hi = default_band(spec) if band is None else band
    axis = np.linspace(lo, hi, resolution)
    p0, p1 = np.meshgrid(axis, axis, indexing="ij")
    p0, p1 = p0.ravel(), p1.ravel()
    return np.column_stack([p0, p1, profit(spec, p0, p1)])


def write_surface_csv(path, rows: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p0", "p1", "profit0"])
        for row in rows:
            w.writerow([f"{v:.9g}" for v in row])
    return path
