"""Randomized trapezoid (quantile importance sampling) estimate of a [0, 1] integral.

``quantile_fn`` is the decreasing likelihood quantile function whose integral
over [0, 1] is the target; any integrable function of s works for the
estimators themselves. Uniform draws come from numpy's counter-based Philox
generator keyed by the seed, so results are reproducible per (n, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import MissingTruth

QuantileFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QisProblem:
    quantile_fn: QuantileFn
    true_value: Optional[float] = None
    smoothness_note: str = ""


def _uniforms(n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.random.Generator(np.random.Philox(key=seed)).random(n)


def _evaluate(fn: QuantileFn, s: np.ndarray) -> np.ndarray:
    # constant functions may return a scalar
    return np.broadcast_to(np.asarray(fn(s), dtype=float), s.shape)


def trapezoid_on_nodes(fn: QuantileFn, nodes) -> float:
    """Trapezoid sum of ``fn`` over sorted nodes; 0 and 1 are added when absent."""
    u = np.sort(np.asarray(nodes, dtype=float))
    if u.size == 0 or u[0] != 0.0:
        u = np.concatenate([[0.0], u])
    if u[-1] != 1.0:
        u = np.concatenate([u, [1.0]])
    f = _evaluate(fn, u)
    h = np.diff(u)
    # the spacings sum to exactly 1, so centring on f[0] keeps constants exact
    base = float(f[0])
    return base + math.fsum(h * ((f[:-1] + f[1:]) / 2.0 - base))


def qis_estimate(problem: QisProblem, n: int, seed: int) -> float:
    """``1/2 sum_{i=1}^{n+1} (U_(i) - U_(i-1)) [L(U_(i-1)) + L(U_(i))]`` with U_(0)=0, U_(n+1)=1."""
    return trapezoid_on_nodes(problem.quantile_fn, _uniforms(n, seed))


def mc_rectangle_estimate(problem: QisProblem, n: int, seed: int) -> float:
    """Plain Monte Carlo mean of the quantile function at n uniform draws."""
    f = _evaluate(problem.quantile_fn, _uniforms(n, seed))
    base = float(f[0])
    return base + math.fsum(f - base) / n


@dataclass(frozen=True)
class RateRow:
    n: int
    mse_qis: float
    mse_mc: float


@dataclass(frozen=True)
class RateReport:
    rows: tuple[RateRow, ...]
    slope_qis: Optional[float]
    slope_mc: Optional[float]
    n_seeds: int


def loglog_slope(ns: Sequence[float], mses: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(mse) on log(n); None when any mse is zero."""
    ns = np.asarray(ns, dtype=float)
    mses = np.asarray(mses, dtype=float)
    if ns.size < 2 or np.any(mses <= 0.0) or not np.all(np.isfinite(mses)):
        return None
    slope, _ = np.polyfit(np.log(ns), np.log(mses), 1)
    return float(slope)


def rate_report(problem: QisProblem, n_grid: Sequence[int], n_seeds: int, base_seed: int = 0) -> RateReport:
    """Empirical MSE of both estimators over seeds ``base_seed .. base_seed + n_seeds - 1``."""
    if problem.true_value is None:
        raise MissingTruth("rate_report needs the problem's true value")
    grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_grid must be strictly ascending")
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    truth = float(problem.true_value)
    rows = []
    for n in grid:
        seeds = range(base_seed, base_seed + n_seeds)
        err_q = np.array([qis_estimate(problem, n, s) - truth for s in seeds])
        err_m = np.array([mc_rectangle_estimate(problem, n, s) - truth for s in seeds])
        rows.append(RateRow(n, float(np.mean(err_q**2)), float(np.mean(err_m**2))))
    return RateReport(
        tuple(rows),
        loglog_slope(grid, [r.mse_qis for r in rows]),
        loglog_slope(grid, [r.mse_mc for r in rows]),
        n_seeds,
    )


BUILTIN_PROBLEMS: dict[str, QisProblem] = {
    "s2": QisProblem(lambda s: s**2, 1.0 / 3.0, "smooth; second derivative 2"),
    "exp": QisProblem(np.exp, math.e - 1.0, "smooth"),
    "linear": QisProblem(lambda s: 2.0 * s + 1.0, 2.0, "linear; trapezoid rule is exact"),
    "const": QisProblem(lambda s: 1.5, 1.5, "constant"),
    "sqrt": QisProblem(np.sqrt, 2.0 / 3.0, "unbounded derivative at 0"),
}
