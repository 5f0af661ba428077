"""Nash and monopoly benchmarks for the duopoly market models."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .market import MarketKind, MarketSpec, demand, joint_profit, profit


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Scan:
    """Numerical search settings.

    Attributes:
        n_points: size of the coarse price scan over ``[c, g]`` (Logit) or
            ``[0, 1]``.
        tol: refinement tolerance on the price.
        max_iter: cap on best-response / refinement iterations.
    """

    n_points: int = 2001
    tol: float = 1e-6
    max_iter: int = 200


DEFAULT_SCAN = Scan()


@dataclass(frozen=True)
class EquilibriumReport:
    p_nash: float
    p_monopoly: float
    pi_nash: float
    pi_monopoly: float

    def to_dict(self) -> dict:
        return asdict(self)


def _scan_axis(spec: MarketSpec, scan: Scan) -> np.ndarray:
    if spec.kind is MarketKind.LOGIT:
        hi = spec.g if spec.g > spec.c + spec.mu else spec.c + 10 * spec.mu
        return np.linspace(spec.c, hi, scan.n_points)
    return np.linspace(0.0, 1.0, scan.n_points)


def best_response(spec: MarketSpec, opp_price: float, axis: np.ndarray) -> float:
    """Most profitable price on ``axis`` against ``opp_price`` (lowest on ties)."""
    return float(axis[int(np.argmax(profit(spec, axis, opp_price)))])


def logit_foc(spec: MarketSpec, p: float) -> float:
    """Symmetric first-order condition of per-firm logit profit, divided by demand.

    ``d/dp_i [(p_i - c) d_i] = d_i [1 - (p_i - c)(1 - d_i)/mu]`` at ``p_0 = p_1 = p``.
    """
    d = demand(spec, p, p)
    return 1.0 - (p - spec.c) * (1.0 - d) / spec.mu


def _bisect(f, lo: float, hi: float, tol: float, max_iter: int) -> float:
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        fmid = f(mid)
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    raise ConvergenceError("bisection did not reach tolerance")


def _golden_max(f, lo: float, hi: float, tol: float, max_iter: int) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a < tol:
            return 0.5 * (a + b)
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    raise ConvergenceError("golden-section search did not reach tolerance")


def _logit_nash(spec: MarketSpec, scan: Scan) -> float:
    axis = _scan_axis(spec, scan)
    step = axis[1] - axis[0]
    p, prev = float(axis[0]), None
    for _ in range(scan.max_iter):
        nxt = best_response(spec, p, axis)
        # a fixed point, or a two-cycle between neighbouring grid prices
        if abs(nxt - p) < scan.tol or (prev is not None and abs(nxt - prev) < scan.tol):
            break
        prev, p = p, nxt
    else:
        raise ConvergenceError(f"best-response iteration exceeded {scan.max_iter} steps")

    f = lambda x: logit_foc(spec, x)  # noqa: E731
    lo, hi = nxt - 2 * step, nxt + 2 * step
    for _ in range(scan.max_iter):
        if f(lo) > 0 > f(hi):
            break
        lo, hi = max(lo - step, spec.c + 1e-12), hi + step
    else:
        raise ConvergenceError("could not bracket the first-order condition")
    return float(_bisect(f, lo, hi, scan.tol, scan.max_iter))


def _symmetric_monopoly(spec: MarketSpec, scan: Scan) -> float:
    axis = _scan_axis(spec, scan)
    step = axis[1] - axis[0]
    j = int(np.argmax(joint_profit(spec, axis, axis)))
    lo, hi = axis[max(j - 1, 0)], axis[min(j + 1, len(axis) - 1)]
    if hi - lo < step:
        return float(axis[j])
    return _golden_max(lambda x: joint_profit(spec, x, x), lo, hi, scan.tol, scan.max_iter)


def nash_price(spec: MarketSpec, scan: Scan = DEFAULT_SCAN, method: str = "closed") -> float:
    """Symmetric Nash price.

    Standard and Edgeworth (k > 0.5) price at marginal cost. For those models
    ``method="numeric"`` returns instead the lowest scan price that survives a
    unilateral deviation scan, as a cross-check of the closed form.
    """
    if spec.kind is MarketKind.LOGIT:
        return _logit_nash(spec, scan)
    if method == "closed":
        return spec.c
    axis = _scan_axis(spec, scan)
    for p in axis[axis >= spec.c]:
        if verify_no_profitable_deviation(spec, float(p), axis):
            return float(p)
    raise ConvergenceError("no certified symmetric price on the scan grid")


def monopoly_price(spec: MarketSpec, scan: Scan = DEFAULT_SCAN, method: str = "closed") -> float:
    """Price maximizing symmetric joint profit."""
    if spec.kind is MarketKind.LOGIT or method != "closed":
        return float(_symmetric_monopoly(spec, scan))
    return float(np.clip((1.0 + spec.c) / 2.0, 0.0, 1.0))


def verify_no_profitable_deviation(spec: MarketSpec, candidate: float, grid, tolerance: float = 1e-9) -> bool:
    """True if no price in ``grid`` beats ``candidate`` against ``candidate``."""
    grid = np.asarray(grid, dtype=float)
    base = profit(spec, candidate, candidate)
    return bool(np.all(np.asarray(profit(spec, grid, candidate)) <= base + tolerance))


@lru_cache(maxsize=64)
def equilibrium_report(spec: MarketSpec, scan: Scan = DEFAULT_SCAN) -> EquilibriumReport:
    pn = float(nash_price(spec, scan))
    pm = float(monopoly_price(spec, scan))
    return EquilibriumReport(
        p_nash=pn,
        p_monopoly=pm,
        pi_nash=float(profit(spec, pn, pn)),
        pi_monopoly=float(profit(spec, pm, pm)),
    )
