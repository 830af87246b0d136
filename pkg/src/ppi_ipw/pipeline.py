"""Informative-labeling workflow on a tabular dataset.

Load a CSV as a finite population, impose an age-driven labeling mechanism
``xi_i = sigmoid(a + b * age_i)``, fit a linear outcome model on the labeled
rows, predict every row, and compare estimators against the full-data mean.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import expit

from .core_types import (
    EstimateWithCI,
    EstimatorTag,
    FinitePopulation,
    LabelingDesign,
    VarianceMode,
    build_design,
    build_population,
    check_compatible,
)
from .errors import (
    DimensionMismatch,
    EmptyAfterFiltering,
    FileError,
    InsufficientLabels,
    SchemaError,
    SingularInformation,
)
from .propensity import estimate_inclusion_probs
from .registry import TABLE_ESTIMATORS, run_estimator
from .simulate import XiModel
from .tables import aligned_table, fmt, to_csv

log = logging.getLogger(__name__)

DEFAULT_INTERCEPT = 3.0
DEFAULT_SLOPE = -0.05


@dataclass(frozen=True)
class DatasetSchema:
    """Column roles. Categorical covariates are one-hot encoded with the first level dropped;
    levels default to the sorted distinct values."""

    outcome: str
    covariates: tuple[str, ...]
    labeling_covariate: str
    categorical: tuple[str, ...] = ()
    levels: Mapping[str, Sequence] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        object.__setattr__(self, "categorical", tuple(self.categorical))
        unknown = set(self.categorical) - set(self.covariates)
        if unknown:
            raise SchemaError(f"categorical columns {sorted(unknown)} are not covariates")
        if self.labeling_covariate not in self.covariates:
            raise SchemaError(f"labeling covariate {self.labeling_covariate!r} must be one of the covariates")
        if self.labeling_covariate in self.categorical:
            raise SchemaError("labeling covariate must be numeric, not categorical")
        if self.outcome in self.covariates:
            raise SchemaError("outcome cannot also be a covariate")

    @property
    def columns(self) -> tuple[str, ...]:
        return (self.outcome, *self.covariates)


def read_table(path, schema: DatasetSchema) -> tuple[pd.DataFrame, int]:
    """Schema columns of the CSV with incomplete rows removed, and the number removed."""
    path = Path(path)
    try:
        df = pd.read_csv(path, skipinitialspace=True)
    except FileNotFoundError as exc:
        raise FileError(f"cannot read {path}: file not found") from exc
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise FileError(f"cannot read {path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise FileError(f"{path} is empty") from exc
    missing = [c for c in schema.columns if c not in df.columns]
    if missing:
        raise SchemaError(f"columns missing from {path.name}: {', '.join(missing)}")
    df = df.loc[:, list(schema.columns)]
    for col in schema.columns:
        if col in schema.categorical:
            continue
        converted = pd.to_numeric(df[col], errors="coerce")
        if (converted.isna() & df[col].notna()).any():
            raise SchemaError(f"column {col!r} is not numeric")
        df[col] = converted
    complete = df.notna().all(axis=1)
    n_dropped = int((~complete).sum())
    df = df.loc[complete].reset_index(drop=True)
    if df.empty:
        raise EmptyAfterFiltering(f"no complete rows left in {path.name}")
    return df, n_dropped


def encode(df: pd.DataFrame, schema: DatasetSchema) -> tuple[np.ndarray, list[str]]:
    """Numeric covariate matrix and column names, categoricals expanded in place."""
    blocks = []
    names: list[str] = []
    for col in schema.covariates:
        if col not in schema.categorical:
            blocks.append(df[col].to_numpy(dtype=float)[:, None])
            names.append(col)
            continue
        values = df[col]
        levels = list(schema.levels.get(col, sorted(values.unique(), key=_level_key)))
        unseen = set(values.unique()) - set(levels)
        if unseen:
            raise SchemaError(f"column {col!r} has levels {sorted(unseen, key=_level_key)} outside its dictionary")
        for level in levels[1:]:
            blocks.append((values == level).to_numpy(dtype=float)[:, None])
            names.append(f"{col}={level}")
    return np.hstack(blocks), names


def _level_key(v):
    return (isinstance(v, str), v if not isinstance(v, str) else v.lower())


def load_csv(path, schema: DatasetSchema) -> FinitePopulation:
    """Finite population (no predictions) from a CSV; rows with any blank schema cell are dropped."""
    df, n_dropped = read_table(path, schema)
    if n_dropped:
        log.info("dropped %d incomplete row(s) from %s", n_dropped, path)
    X, names = encode(df, schema)
    return build_population(X, df[schema.outcome].to_numpy(dtype=float), covariate_names=names)


def impose_labeling(
    pop: FinitePopulation,
    coef_intercept: float = DEFAULT_INTERCEPT,
    coef_slope: float = DEFAULT_SLOPE,
    labeling_covariate_index: int = 0,
    seed: int = 0,
) -> LabelingDesign:
    """``xi_i = sigmoid(a + b x_i)`` and ``R_i ~ Bernoulli(xi_i)``."""
    if not 0 <= labeling_covariate_index < pop.n_covariates:
        raise DimensionMismatch(
            f"labeling covariate index {labeling_covariate_index} outside 0..{pop.n_covariates - 1}"
        )
    x = pop.covariates[:, labeling_covariate_index]
    xi = expit(coef_intercept + coef_slope * x)
    # probabilities can only underflow to 0 for absurd coefficients
    xi = np.clip(xi, np.finfo(float).tiny, 1.0)
    R = np.random.default_rng(seed).random(pop.n_units) < xi
    return build_design(xi, R)


def fit_ols(X, y) -> np.ndarray:
    """Least-squares coefficients of y on (1, X), intercept first."""
    X = np.asarray(X, dtype=float)
    A = np.column_stack([np.ones(X.shape[0]), X])
    coef, _, rank, _ = np.linalg.lstsq(A, np.asarray(y, dtype=float), rcond=None)
    if rank < A.shape[1]:
        raise SingularInformation("outcome regression design is rank deficient")
    return coef


def fit_outcome_model(pop: FinitePopulation, design: LabelingDesign) -> np.ndarray:
    """Predictions for all N units from an OLS fit on the labeled rows."""
    check_compatible(pop, design)
    p = pop.n_covariates
    if design.n_lab <= p + 1:
        raise InsufficientLabels(f"{design.n_lab} labeled rows cannot fit {p + 1} coefficients")
    lab = design.indicators
    coef = fit_ols(pop.covariates[lab], pop.outcomes[lab])
    return coef[0] + pop.covariates @ coef[1:]


PIPELINE_COLUMNS = ("estimator", "estimate", "se", "lower", "upper")


@dataclass(frozen=True)
class PipelineResult:
    estimates: tuple[EstimateWithCI, ...]
    truth: float
    n_units: int
    n_lab: int
    n_dropped: int
    xi_model: XiModel

    def get(self, tag: EstimatorTag | str) -> EstimateWithCI:
        tag = EstimatorTag(tag)
        for e in self.estimates:
            if e.estimator_tag is tag:
                return e
        raise KeyError(tag)

    def records(self) -> list[list[str]]:
        rows = [
            [e.estimator_tag.value, fmt(e.estimate), fmt(e.std_error), fmt(e.ci_lower), fmt(e.ci_upper)]
            for e in self.estimates
        ]
        rows.append(["truth", fmt(self.truth), "", "", ""])
        return rows

    def to_csv(self) -> str:
        return to_csv(PIPELINE_COLUMNS, self.records())

    def to_table(self) -> str:
        header = (
            f"N={self.n_units} labeled={self.n_lab} dropped_rows={self.n_dropped} xi={self.xi_model.value}"
        )
        return header + "\n" + aligned_table(PIPELINE_COLUMNS, self.records())


def run_pipeline(
    path,
    schema: DatasetSchema,
    coef_intercept: float = DEFAULT_INTERCEPT,
    coef_slope: float = DEFAULT_SLOPE,
    xi_model: XiModel | str = XiModel.TRUE,
    seed: int = 0,
    *,
    variance: VarianceMode = "iid",
    level: float = 0.95,
    estimators: Sequence[EstimatorTag] = TABLE_ESTIMATORS,
) -> PipelineResult:
    """Load, label, fit, predict and estimate; ``truth`` is the full-data outcome mean.

    With ``xi_model="estimated"`` the inclusion probabilities used by the
    weighted estimators come from a logistic fit of the labels on the labeling
    covariate instead of the imposed ones.
    """
    xi_model = XiModel(xi_model)
    df, n_dropped = read_table(path, schema)
    X, names = encode(df, schema)
    pop = build_population(X, df[schema.outcome].to_numpy(dtype=float), covariate_names=names)
    idx = names.index(schema.labeling_covariate)
    design = impose_labeling(pop, coef_intercept, coef_slope, idx, seed)
    pop = pop.with_predictions(fit_outcome_model(pop, design))
    if xi_model is XiModel.ESTIMATED:
        design = design.with_probs(estimate_inclusion_probs(pop.covariates[:, idx], design.indicators))
    estimates = tuple(
        run_estimator(tag, pop, design, variance=variance, level=level, seed=seed) for tag in estimators
    )
    return PipelineResult(estimates, pop.mean, pop.n_units, design.n_lab, n_dropped, xi_model)


def infer_schema(
    path,
    outcome: str,
    labeling_covariate: str,
    covariates: Optional[Sequence[str]] = None,
    categorical: Optional[Sequence[str]] = None,
) -> DatasetSchema:
    """Schema from a CSV header: covariates default to every other column and
    categoricals to the non-numeric ones among them."""
    try:
        head = pd.read_csv(path, skipinitialspace=True)
    except FileNotFoundError as exc:
        raise FileError(f"cannot read {path}: file not found") from exc
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise FileError(f"cannot read {path}: {exc}") from exc
    if outcome not in head.columns:
        raise SchemaError(f"outcome column {outcome!r} not in {Path(path).name}")
    if covariates is None:
        covariates = [c for c in head.columns if c != outcome]
    if categorical is None:
        categorical = [
            c
            for c in covariates
            if c in head.columns and not pd.api.types.is_numeric_dtype(head[c]) and c != labeling_covariate
        ]
    return DatasetSchema(outcome, tuple(covariates), labeling_covariate, tuple(categorical))
