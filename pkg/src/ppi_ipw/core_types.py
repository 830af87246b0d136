"""Shared domain types: finite populations, labeling designs and interval estimates."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import (
    DimensionMismatch,
    NoLabeledUnits,
    NonFiniteValue,
    ProbabilityOutOfRange,
)

# "poisson": design-based plug-in with the (1 - xi) finite-population factor.
# "iid": units treated as iid superpopulation draws, no finite-population factor.
VarianceMode = Literal["poisson", "iid"]
VARIANCE_MODES: tuple[str, ...] = ("poisson", "iid")


class EstimatorTag(str, enum.Enum):
    CLASSIC = "Classic"
    HT = "HT"
    HAJEK = "Hajek"
    GREG = "GREG"
    BIN_SMOOTH = "BinSmooth"
    PPI = "PPI"
    PPI_HT = "PPI_HT"
    PPI_HAJEK = "PPI_Hajek"
    CROSS_PPI = "CrossPPI"

    def __str__(self) -> str:
        return self.value


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _as_finite(name: str, values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if ndim == 2 and arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class FinitePopulation:
    """N units with covariates, outcomes and (optionally) model predictions.

    Arrays are stored read-only. Use :func:`build_population` rather than the
    constructor so that shapes and finiteness are checked.
    """

    covariates: np.ndarray
    outcomes: np.ndarray
    predictions: Optional[np.ndarray] = None
    covariate_names: Optional[tuple[str, ...]] = None

    @property
    def n_units(self) -> int:
        return int(self.outcomes.shape[0])

    @property
    def n_covariates(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def mean(self) -> float:
        """The finite-population mean of the outcome."""
        return float(np.mean(self.outcomes))

    def with_predictions(self, predictions) -> "FinitePopulation":
        return build_population(
            self.covariates, self.outcomes, predictions, covariate_names=self.covariate_names
        )

    def with_outcomes(self, outcomes) -> "FinitePopulation":
        return build_population(
            self.covariates, outcomes, self.predictions, covariate_names=self.covariate_names
        )

    def subset(self, index) -> "FinitePopulation":
        yhat = None if self.predictions is None else self.predictions[index]
        return build_population(
            self.covariates[index], self.outcomes[index], yhat, covariate_names=self.covariate_names
        )


def build_population(
    X,
    Y,
    Yhat=None,
    *,
    covariate_names: Optional[Sequence[str]] = None,
) -> FinitePopulation:
    """Validate raw arrays and assemble a :class:`FinitePopulation`.

    A one-dimensional ``X`` is read as a single covariate column.
    """
    X = _as_finite("covariates", X, 2)
    Y = _as_finite("outcomes", Y, 1)
    if Y.shape[0] == 0:
        raise DimensionMismatch("population must contain at least one unit")
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"covariates have {X.shape[0]} rows but outcomes have length {Y.shape[0]}")
    if Yhat is not None:
        Yhat = _as_finite("predictions", Yhat, 1)
        if Yhat.shape[0] != Y.shape[0]:
            raise DimensionMismatch(
                f"predictions have length {Yhat.shape[0]} but outcomes have length {Y.shape[0]}"
            )
        Yhat = _frozen(Yhat)
    names = None
    if covariate_names is not None:
        names = tuple(str(c) for c in covariate_names)
        if len(names) != X.shape[1]:
            raise DimensionMismatch(f"{len(names)} covariate names for {X.shape[1]} columns")
    return FinitePopulation(_frozen(X), _frozen(Y), Yhat, names)


@dataclass(frozen=True, eq=False)
class LabelingDesign:
    """Inclusion probabilities xi_i and realized label indicators R_i."""

    inclusion_probs: np.ndarray
    indicators: np.ndarray

    @property
    def n_units(self) -> int:
        return int(self.indicators.shape[0])

    @property
    def n_lab(self) -> int:
        return int(np.count_nonzero(self.indicators))

    @property
    def labeled(self) -> np.ndarray:
        """Indices of labeled units, ascending."""
        return np.flatnonzero(self.indicators)

    def require_labels(self, minimum: int = 1) -> None:
        if self.n_lab < minimum:
            raise NoLabeledUnits(f"estimator needs at least {minimum} labeled unit(s), design has {self.n_lab}")

    def with_probs(self, xi) -> "LabelingDesign":
        return build_design(xi, self.indicators)


def build_design(xi, R) -> LabelingDesign:
    xi = _as_finite("inclusion_probs", xi, 1)
    R_arr = np.asarray(R)
    if R_arr.ndim != 1:
        raise DimensionMismatch("indicators must be one-dimensional")
    if xi.shape[0] != R_arr.shape[0]:
        raise DimensionMismatch(f"inclusion_probs length {xi.shape[0]} != indicators length {R_arr.shape[0]}")
    if np.any(xi <= 0.0) or np.any(xi > 1.0):
        bad = xi[(xi <= 0.0) | (xi > 1.0)][0]
        raise ProbabilityOutOfRange(f"inclusion probabilities must lie in (0, 1], found {bad!r}")
    if R_arr.dtype != bool:
        R_num = R_arr.astype(float)
        if not np.all((R_num == 0.0) | (R_num == 1.0)):
            raise ProbabilityOutOfRange("indicators must be 0/1")
        R_arr = R_num == 1.0
    return LabelingDesign(_frozen(xi), _frozen(R_arr.copy()))


def check_compatible(pop: FinitePopulation, design: LabelingDesign) -> None:
    if pop.n_units != design.n_units:
        raise DimensionMismatch(f"population has {pop.n_units} units but design covers {design.n_units}")


def normal_quantile(level: float) -> float:
    """Two-sided standard normal critical value, e.g. 1.95996... for 0.95."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return float(stats.norm.ppf(0.5 + level / 2.0))


@dataclass(frozen=True)
class EstimateWithCI:
    estimate: float
    std_error: float
    ci_lower: float
    ci_upper: float
    level: float
    estimator_tag: EstimatorTag

    @classmethod
    def from_variance(
        cls, estimate: float, variance: float, tag: EstimatorTag, level: float = 0.95
    ) -> "EstimateWithCI":
        # tiny negative variances come from cancellation only
        se = float(np.sqrt(max(float(variance), 0.0)))
        half = normal_quantile(level) * se
        est = float(estimate)
        return cls(est, se, est - half, est + half, float(level), EstimatorTag(tag))

    @property
    def width(self) -> float:
        return self.ci_upper - self.ci_lower

    @property
    def degenerate(self) -> bool:
        """True when the standard error is zero and the interval collapses to a point."""
        return self.std_error == 0.0

    def covers(self, value: float) -> bool:
        return self.ci_lower <= value <= self.ci_upper
