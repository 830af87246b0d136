"""Replicated simulation of mean estimation under informative labeling.

Two data-generating processes are provided. ``binary_logit`` is the N=500
logistic design with xi_i = sigmoid(0.5 X_i). ``facet`` keeps the same outcome
and prediction laws but calibrates the propensity intercept so that the
average inclusion probability equals a target labeled proportion ``p_lab``.

Each replicate draws its randomness from ``(seed, replicate, attempt)`` so a
report does not depend on execution order or worker count.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .core_types import (
    VARIANCE_MODES,
    EstimatorTag,
    FinitePopulation,
    LabelingDesign,
    VarianceMode,
    build_design,
    build_population,
)
from .errors import InvalidProportion, PPIError
from .ppi import logistic_trainer
from .propensity import estimate_inclusion_probs
from .registry import TABLE_ESTIMATORS, parse_tags, run_estimator
from .tables import aligned_table, fmt, to_csv

PROPENSITY_SLOPE = 0.5
PREDICTION_NOISE_SD = 0.5
FACET_N_UNITS = 50_000
MAX_ATTEMPTS = 100


class Dgp(str, enum.Enum):
    BINARY_LOGIT = "binary_logit"
    FACET = "facet"


class XiModel(str, enum.Enum):
    TRUE = "true"
    ESTIMATED = "estimated"


@dataclass(frozen=True)
class SimulationConfig:
    n_units: int = 500
    n_replicates: int = 200
    dgp: Dgp = Dgp.BINARY_LOGIT
    p_lab: Optional[float] = None
    xi_model: XiModel = XiModel.ESTIMATED
    estimators: tuple[EstimatorTag, ...] = TABLE_ESTIMATORS
    ci_level: float = 0.95
    seed: int = 0
    variance: VarianceMode = "iid"
    superpopulation: bool = False
    cross_folds: int = 5

    def __post_init__(self):
        object.__setattr__(self, "dgp", Dgp(self.dgp))
        object.__setattr__(self, "xi_model", XiModel(self.xi_model))
        tags = tuple(
            EstimatorTag(t) if isinstance(t, EstimatorTag) else parse_tags([t])[0] for t in self.estimators
        )
        object.__setattr__(self, "estimators", tags)
        if self.n_units < 2:
            raise ValueError("n_units must be >= 2")
        if self.n_replicates < 1:
            raise ValueError("n_replicates must be >= 1")
        if self.p_lab is not None and not 0.0 < self.p_lab <= 1.0:
            raise InvalidProportion(f"p_lab must lie in (0, 1], got {self.p_lab}")
        if self.dgp is Dgp.FACET and self.p_lab is None:
            raise InvalidProportion("the facet design needs p_lab")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError("ci_level must lie in (0, 1)")
        if self.variance not in VARIANCE_MODES:
            raise ValueError(f"variance must be one of {VARIANCE_MODES}")
        if not tags:
            raise ValueError("at least one estimator is required")

    @classmethod
    def facet(cls, p_lab: float, **kwargs) -> "SimulationConfig":
        kwargs.setdefault("n_units", FACET_N_UNITS)
        return cls(dgp=Dgp.FACET, p_lab=p_lab, **kwargs)


def _draw(N: int, seed, covariates, xi_of_x):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal(N)
    if covariates is not None:
        X = np.asarray(covariates, dtype=float).reshape(N)
    Y = (rng.random(N) < expit(X)).astype(float)
    xi = xi_of_x(X)
    R = rng.random(N) < xi
    Yhat = expit(X + rng.normal(0.0, PREDICTION_NOISE_SD, N))
    return build_population(X, Y, Yhat, covariate_names=["X"]), build_design(xi, R)


def dgp_binary_logit(N: int, seed, covariates=None) -> tuple[FinitePopulation, LabelingDesign]:
    """X ~ N(0,1), Y ~ Bernoulli(sigmoid(X)), xi = sigmoid(0.5 X), Yhat = sigmoid(X + eps).

    ``covariates`` replaces the drawn X (the remaining draws are unchanged).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    return _draw(N, seed, covariates, lambda X: expit(PROPENSITY_SLOPE * X))


def facet_inclusion_probs(X, p_lab: float) -> np.ndarray:
    """``sigmoid(b + 0.5 X)`` with the intercept b solved so the probabilities average ``p_lab``."""
    if not 0.0 < p_lab <= 1.0:
        raise InvalidProportion(f"p_lab must lie in (0, 1], got {p_lab}")
    X = np.asarray(X, dtype=float)
    if p_lab == 1.0:
        return np.ones_like(X)
    eta = PROPENSITY_SLOPE * X
    b = brentq(lambda b: float(np.mean(expit(b + eta))) - p_lab, -60.0, 60.0, xtol=1e-14)
    return expit(b + eta)


def dgp_facet(N: int, p_lab: float, seed, covariates=None) -> tuple[FinitePopulation, LabelingDesign]:
    """Outcome and prediction laws of :func:`dgp_binary_logit` with a calibrated propensity intercept."""
    if not 0.0 < p_lab <= 1.0:
        raise InvalidProportion(f"p_lab must lie in (0, 1], got {p_lab}")
    return _draw(N, seed, covariates, lambda X: facet_inclusion_probs(X, p_lab))


def generate(config: SimulationConfig, seed) -> tuple[FinitePopulation, LabelingDesign]:
    if config.dgp is Dgp.FACET:
        return dgp_facet(config.n_units, config.p_lab, seed)
    return dgp_binary_logit(config.n_units, seed)


@dataclass(frozen=True)
class IntervalRow:
    replicate: int
    estimator: EstimatorTag
    estimate: float
    lower: float
    upper: float
    truth: float

    @property
    def covered(self) -> bool:
        return self.lower <= self.truth <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ReplicateResult:
    replicate: int
    truth: float
    n_lab: int
    attempts: int
    intervals: tuple[IntervalRow, ...]


def run_replicate(config: SimulationConfig, replicate: int) -> ReplicateResult:
    """Generate one dataset and evaluate every configured estimator on it.

    A dataset on which any estimator fails (for instance too few labels) is
    discarded and regenerated from the next attempt's sub-seed.
    """
    last_error: Optional[Exception] = None
    for attempt in range(MAX_ATTEMPTS):
        pop, design = generate(config, [config.seed, replicate, attempt])
        try:
            if config.xi_model is XiModel.ESTIMATED:
                design = design.with_probs(estimate_inclusion_probs(pop.covariates, design.indicators))
            truth = pop.mean
            rows = []
            for tag in config.estimators:
                est = run_estimator(
                    tag,
                    pop,
                    design,
                    variance=config.variance,
                    level=config.ci_level,
                    superpopulation=config.superpopulation,
                    trainer=logistic_trainer,
                    cross_folds=config.cross_folds,
                    seed=config.seed + replicate,
                )
                rows.append(IntervalRow(replicate, tag, est.estimate, est.ci_lower, est.ci_upper, truth))
        except PPIError as exc:
            last_error = exc
            continue
        return ReplicateResult(replicate, truth, design.n_lab, attempt + 1, tuple(rows))
    raise PPIError(f"replicate {replicate} failed {MAX_ATTEMPTS} times; last error: {last_error}")


def _run_all(config: SimulationConfig, replicates: Sequence[int], threads: int) -> list[ReplicateResult]:
    work = partial(run_replicate, config)
    if threads <= 1 or len(replicates) <= 1:
        return [work(r) for r in replicates]
    with ProcessPoolExecutor(max_workers=min(threads, len(replicates))) as pool:
        return list(pool.map(work, replicates, chunksize=max(1, len(replicates) // (4 * threads))))


@dataclass(frozen=True)
class ReportRow:
    estimator: EstimatorTag
    mean_estimate: float
    bias: float
    mean_width: float
    coverage: float
    n_covered: int
    avg_n_lab: float


REPORT_COLUMNS = ("estimator", "mean_estimate", "bias", "mean_width", "coverage", "avg_n_lab")
INTERVAL_COLUMNS = ("replicate", "estimator", "estimate", "lower", "upper", "truth", "covered")


@dataclass(frozen=True)
class SimulationReport:
    rows: tuple[ReportRow, ...]
    truth: float
    n_replicates: int
    n_regenerated: int
    config: SimulationConfig = field(repr=False)

    def row(self, tag: EstimatorTag | str) -> ReportRow:
        tag = EstimatorTag(tag)
        for r in self.rows:
            if r.estimator is tag:
                return r
        raise KeyError(tag)

    def records(self) -> list[list[str]]:
        return [
            [r.estimator.value, fmt(r.mean_estimate), fmt(r.bias), fmt(r.mean_width), fmt(r.coverage), fmt(r.avg_n_lab)]
            for r in self.rows
        ]

    def to_csv(self) -> str:
        return to_csv(REPORT_COLUMNS, self.records())

    def to_table(self) -> str:
        cfg = self.config
        header = (
            f"dgp={cfg.dgp.value} N={cfg.n_units} replicates={self.n_replicates} "
            f"xi={cfg.xi_model.value} variance={cfg.variance}"
        )
        if cfg.p_lab is not None:
            header += f" p_lab={fmt(cfg.p_lab)}"
        footer = f"truth (mean of replicate population means) = {fmt(self.truth)}; regenerated datasets = {self.n_regenerated}"
        return "\n".join([header, aligned_table(REPORT_COLUMNS, self.records()), footer])


def summarize(config: SimulationConfig, results: Sequence[ReplicateResult]) -> SimulationReport:
    n = len(results)
    truth = float(np.mean([res.truth for res in results]))
    avg_n_lab = float(np.mean([res.n_lab for res in results]))
    rows = []
    for j, tag in enumerate(config.estimators):
        ivs = [res.intervals[j] for res in results]
        est = np.array([iv.estimate for iv in ivs])
        truths = np.array([iv.truth for iv in ivs])
        covered = sum(iv.covered for iv in ivs)
        rows.append(
            ReportRow(
                tag,
                float(est.mean()),
                float(np.mean(est - truths)),
                float(np.mean([iv.width for iv in ivs])),
                covered / n,
                int(covered),
                avg_n_lab,
            )
        )
    regenerated = sum(res.attempts - 1 for res in results)
    return SimulationReport(tuple(rows), truth, n, regenerated, config)


def run_simulation(config: SimulationConfig, threads: int = 1) -> SimulationReport:
    """Bias, mean interval width, coverage and average n_lab per estimator.

    Coverage is judged against each replicate's own finite-population mean;
    bias is the mean of (estimate - replicate truth).
    """
    return summarize(config, _run_all(config, range(config.n_replicates), threads))


def first_k_intervals(config: SimulationConfig, k: int, threads: int = 1) -> list[IntervalRow]:
    """Per-replicate intervals for the first ``k`` replicates, replicate-major."""
    if k < 0 or k > config.n_replicates:
        raise ValueError(f"k must lie in [0, {config.n_replicates}]")
    results = _run_all(config, range(k), threads)
    return [iv for res in results for iv in res.intervals]


def intervals_records(rows: Sequence[IntervalRow]) -> list[list[str]]:
    return [
        [fmt(r.replicate), r.estimator.value, fmt(r.estimate), fmt(r.lower), fmt(r.upper), fmt(r.truth), fmt(r.covered)]
        for r in rows
    ]
