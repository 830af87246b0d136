"""Design-based estimators of a finite-population mean.

Classic labeled mean, Horvitz-Thompson, Hajek, GREG and the binning-smoothing
estimator. Every IPW estimator here takes the labeling design's inclusion
probabilities as given, so passing fitted propensities in place of known ones
is just a matter of building the design from them.

Variance formulas
-----------------
With weights w_i = R_i / xi_i, residuals r_i about the point estimate, and
``N_hat = sum(w_i)``:

======== ======================================= =============================================
 mode     Horvitz-Thompson                         Hajek
======== ======================================= =============================================
poisson   N^-2 sum R (1 - xi) y^2 / xi^2           N_hat^-2 sum R (1 - xi) r^2 / xi^2
iid       var_N(R y / xi) / N                      var_N(N R r / (N_hat xi)) / N
======== ======================================= =============================================

``var_N`` is the sample variance (ddof=1) over all N units, with unlabeled units
contributing zero. The Poisson forms are exact for independent Bernoulli
labeling when the finite-population mean is the target; the iid forms drop the
finite-population factor and are conservative for it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core_types import (
    VARIANCE_MODES,
    EstimateWithCI,
    EstimatorTag,
    FinitePopulation,
    LabelingDesign,
    VarianceMode,
    check_compatible,
)
from .errors import BinCoverageError, NoLabeledUnits, SingularInformation


def _check_mode(variance: str) -> None:
    if variance not in VARIANCE_MODES:
        raise ValueError(f"variance must be one of {VARIANCE_MODES}, got {variance!r}")


def _unit_variance(z: np.ndarray) -> float:
    n = z.shape[0]
    if n < 2:
        return 0.0
    return float(np.var(z, ddof=1) / n)


def ht_mean(values, labeled, probs, n_units: int, variance: VarianceMode = "poisson") -> tuple[float, float]:
    """Horvitz-Thompson mean of ``values`` and its variance estimate.

    ``labeled`` is a boolean mask over all units; ``values`` at unlabeled
    positions are ignored.
    """
    _check_mode(variance)
    R = np.asarray(labeled, dtype=bool)
    pi = np.asarray(probs, dtype=float)
    z = np.where(R, np.asarray(values, dtype=float) / pi, 0.0)
    est = float(z.sum() / n_units)
    if variance == "poisson":
        var = float(np.sum(np.where(R, (1.0 - pi) * z * z, 0.0)) / n_units**2)
    else:
        var = _unit_variance(z)
    return est, var


def hajek_mean(values, labeled, probs, variance: VarianceMode = "poisson") -> tuple[float, float]:
    """Hajek (ratio) mean of ``values`` and its linearization variance."""
    _check_mode(variance)
    R = np.asarray(labeled, dtype=bool)
    if not R.any():
        raise NoLabeledUnits("Hajek estimator needs at least one labeled unit")
    pi = np.asarray(probs, dtype=float)
    v = np.asarray(values, dtype=float)
    w = np.where(R, 1.0 / pi, 0.0)
    n_hat = float(w.sum())
    est = float(np.sum(np.where(R, w * v, 0.0)) / n_hat)
    resid = np.where(R, w * (v - est), 0.0)
    if variance == "poisson":
        var = float(np.sum((1.0 - pi) * resid * resid) / n_hat**2)
    else:
        var = _unit_variance(resid * (R.shape[0] / n_hat))
    return est, var


def classic_mean(pop: FinitePopulation, design: LabelingDesign, level: float = 0.95) -> EstimateWithCI:
    """Unweighted mean of the labeled outcomes with the usual s / sqrt(n) standard error."""
    check_compatible(pop, design)
    design.require_labels(2)
    y = pop.outcomes[design.indicators]
    se2 = float(np.var(y, ddof=1) / y.shape[0])
    return EstimateWithCI.from_variance(float(np.mean(y)), se2, EstimatorTag.CLASSIC, level)


def horvitz_thompson(
    pop: FinitePopulation,
    design: LabelingDesign,
    variance: VarianceMode = "poisson",
    level: float = 0.95,
) -> EstimateWithCI:
    check_compatible(pop, design)
    design.require_labels(1)
    est, var = ht_mean(pop.outcomes, design.indicators, design.inclusion_probs, pop.n_units, variance)
    return EstimateWithCI.from_variance(est, var, EstimatorTag.HT, level)


def hajek(
    pop: FinitePopulation,
    design: LabelingDesign,
    variance: VarianceMode = "poisson",
    level: float = 0.95,
) -> EstimateWithCI:
    check_compatible(pop, design)
    design.require_labels(1)
    est, var = hajek_mean(pop.outcomes, design.indicators, design.inclusion_probs, variance)
    return EstimateWithCI.from_variance(est, var, EstimatorTag.HAJEK, level)


def greg_coefficients(pop: FinitePopulation, design: LabelingDesign) -> np.ndarray:
    """Weighted least-squares fit of Y on (1, X) over labeled units, weights 1 / xi.

    Returns ``(intercept, slopes...)``. A covariate that is constant over the
    labeled units carries no slope information; its slope is set to zero.
    """
    check_compatible(pop, design)
    p = pop.n_covariates
    design.require_labels(p + 2)
    lab = design.indicators
    X = pop.covariates[lab]
    y = pop.outcomes[lab]
    sw = np.sqrt(1.0 / design.inclusion_probs[lab])
    active = np.ptp(X, axis=0) > 0.0
    A = np.column_stack([np.ones(X.shape[0]), X[:, active]])
    Aw = A * sw[:, None]
    coef, _, rank, _ = np.linalg.lstsq(Aw, y * sw, rcond=None)
    if rank < A.shape[1]:
        raise SingularInformation("GREG regression design is rank deficient")
    full = np.zeros(p + 1)
    full[0] = coef[0]
    full[1:][active] = coef[1:]
    return full


def greg(
    pop: FinitePopulation,
    design: LabelingDesign,
    variance: VarianceMode = "poisson",
    level: float = 0.95,
    *,
    calibrate_intercept: bool = True,
    coefficients=None,
) -> EstimateWithCI:
    """Generalized regression estimator of the mean.

    ``theta_HT + c . (a_bar - a_bar_HT)`` where ``a`` holds the calibration
    variables (the covariates, preceded by a constant column when
    ``calibrate_intercept``), ``a_bar`` their known population means and
    ``a_bar_HT`` their HT estimates. ``c`` comes from :func:`greg_coefficients`
    unless ``coefficients`` overrides it (length p+1 with the intercept, p
    without). The variance is the HT form applied to the residuals
    ``y - a . c``.
    """
    check_compatible(pop, design)
    design.require_labels(1)
    R = design.indicators
    xi = design.inclusion_probs
    N = pop.n_units
    if calibrate_intercept:
        A = np.column_stack([np.ones(N), pop.covariates])
    else:
        A = pop.covariates
    if coefficients is None:
        fitted = greg_coefficients(pop, design)
        c = fitted if calibrate_intercept else fitted[1:]
    else:
        c = np.asarray(coefficients, dtype=float)
        if c.shape != (A.shape[1],):
            raise ValueError(f"coefficients must have length {A.shape[1]}, got {c.shape}")
    fit = A @ c
    resid = pop.outcomes - fit
    ht_y, _ = ht_mean(pop.outcomes, R, xi, N)
    a_ht = (np.where(R, 1.0 / xi, 0.0) @ A) / N
    est = ht_y + float(c @ (A.mean(axis=0) - a_ht))
    _check_mode(variance)
    if variance == "poisson":
        _, var = ht_mean(resid, R, xi, N, "poisson")
    else:
        z = np.where(R, resid / xi, 0.0) + fit
        var = _unit_variance(z)
    return EstimateWithCI.from_variance(est, var, EstimatorTag.GREG, level)


class BinStrategy(str, enum.Enum):
    EQUAL_WIDTH = "equal_width"
    EQUAL_COUNT = "equal_count"


@dataclass(frozen=True, eq=False)
class BinSpec:
    """Bins ``[a_1, a_2), ..., [a_B, a_{B+1}]`` over the inclusion probabilities.

    A degenerate range (all probabilities equal) is a single bin whose two
    edges coincide.
    """

    n_bins: int
    edges: np.ndarray
    midpoints: np.ndarray

    def assign(self, xi) -> np.ndarray:
        """0-based bin index of each value; the last bin is closed on the right."""
        xi = np.asarray(xi, dtype=float)
        lo, hi = self.edges[0], self.edges[-1]
        outside = (xi < lo) | (xi > hi)
        if outside.any():
            raise BinCoverageError(
                f"{int(outside.sum())} value(s) fall outside the bin range [{lo}, {hi}]"
            )
        idx = np.searchsorted(self.edges, xi, side="right") - 1
        return np.clip(idx, 0, self.n_bins - 1)


def bin_spec_from_edges(edges) -> BinSpec:
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.shape[0] < 2:
        raise ValueError("need at least two bin edges")
    if edges.shape[0] > 2 and np.any(np.diff(edges) <= 0.0):
        raise ValueError("bin edges must be strictly increasing")
    mids = (edges[:-1] + edges[1:]) / 2.0
    edges.setflags(write=False)
    mids.setflags(write=False)
    return BinSpec(int(edges.shape[0] - 1), edges, mids)


def make_bins(xi, n_bins: int, strategy: BinStrategy | str = BinStrategy.EQUAL_WIDTH) -> BinSpec:
    """Bins spanning ``[min xi, max xi]``.

    Equal-count edges are empirical quantiles; tied quantiles are merged, so
    heavily tied inputs can produce fewer than ``n_bins`` bins.
    """
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.size == 0:
        raise ValueError("xi must be non-empty")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    strategy = BinStrategy(strategy)
    lo, hi = float(xi.min()), float(xi.max())
    if lo == hi:
        return bin_spec_from_edges([lo, hi])
    if strategy is BinStrategy.EQUAL_WIDTH:
        edges = np.linspace(lo, hi, n_bins + 1)
    else:
        edges = np.unique(np.quantile(xi, np.linspace(0.0, 1.0, n_bins + 1)))
    # pin the outer edges exactly to the data range
    edges[0], edges[-1] = lo, hi
    return bin_spec_from_edges(edges)


def default_bin_count(n_lab: int) -> int:
    return max(1, math.ceil(math.sqrt(n_lab)))


def bin_smooth(
    pop: FinitePopulation,
    design: LabelingDesign,
    spec: Optional[BinSpec] = None,
    variance: VarianceMode = "poisson",
    level: float = 0.95,
    *,
    strategy: BinStrategy | str = BinStrategy.EQUAL_WIDTH,
) -> EstimateWithCI:
    """Binning-smoothing estimator: HT with each xi_i replaced by its bin midpoint.

    ``theta_BS = sum_b (N_b / N) (1 / N_b) sum_{i in bin b} R_i Y_i / p_b``, with
    bins formed over all N units' inclusion probabilities, so that it collapses
    to ``N^-1 sum R_i Y_i / p_b(i)``. Each bin is treated as a Poisson stratum
    with probability ``p_b`` for the variance. Without ``spec``, bins come from
    :func:`make_bins` with ``ceil(sqrt(n_lab))`` bins.
    """
    check_compatible(pop, design)
    design.require_labels(1)
    xi = design.inclusion_probs
    if spec is None:
        spec = make_bins(xi, default_bin_count(design.n_lab), strategy)
    p = spec.midpoints[spec.assign(xi)]
    est, var = ht_mean(pop.outcomes, design.indicators, p, pop.n_units, variance)
    return EstimateWithCI.from_variance(est, var, EstimatorTag.BIN_SMOOTH, level)
