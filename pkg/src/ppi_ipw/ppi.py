"""Prediction-powered inference with unweighted and inverse-probability-weighted rectifiers.

The estimate is the mean prediction over the whole population minus a
rectifier, an estimate of the mean residual ``e_i = Yhat_i - Y_i`` computed
from labeled units only. Under informative labeling the unweighted rectifier
is biased; the HT and Hajek rectifiers reweight residuals by ``1 / xi_i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core_types import (
    EstimateWithCI,
    EstimatorTag,
    FinitePopulation,
    LabelingDesign,
    VarianceMode,
    check_compatible,
)
from .design_estimators import hajek_mean, ht_mean
from .errors import FoldTooSmall, MissingPredictions, NoLabeledUnits
from .propensity import fit_logistic, predict_xi

Predictor = Callable[[np.ndarray], np.ndarray]
Trainer = Callable[[np.ndarray, np.ndarray], Predictor]


class RectifierForm(str, enum.Enum):
    UNWEIGHTED = "unweighted"
    HT = "ht"
    HAJEK = "hajek"


_TAGS = {
    RectifierForm.UNWEIGHTED: EstimatorTag.PPI,
    RectifierForm.HT: EstimatorTag.PPI_HT,
    RectifierForm.HAJEK: EstimatorTag.PPI_HAJEK,
}


@dataclass(frozen=True)
class Rectifier:
    value: float
    variance: float
    form: RectifierForm


def _residuals(pop: FinitePopulation) -> np.ndarray:
    if pop.predictions is None:
        raise MissingPredictions("population has no predictions attached")
    return pop.predictions - pop.outcomes


def _unweighted(e: np.ndarray, mask: np.ndarray) -> Rectifier:
    n = int(mask.sum())
    if n < 2:
        raise NoLabeledUnits(f"unweighted rectifier needs at least 2 labeled units, got {n}")
    el = e[mask]
    return Rectifier(float(el.mean()), float(np.var(el, ddof=1) / n), RectifierForm.UNWEIGHTED)


def _weighted(e, mask, probs, n_units, form: RectifierForm, variance: VarianceMode) -> Rectifier:
    if not mask.any():
        raise NoLabeledUnits("weighted rectifier needs at least one labeled unit")
    if form is RectifierForm.HT:
        value, var = ht_mean(e, mask, probs, n_units, variance)
    else:
        value, var = hajek_mean(e, mask, probs, variance)
    return Rectifier(value, var, form)


def rectifier_unweighted(pop: FinitePopulation, design: LabelingDesign) -> Rectifier:
    """Mean labeled residual; variance is the labeled sample variance over n_lab."""
    check_compatible(pop, design)
    return _unweighted(_residuals(pop), design.indicators)


def rectifier_ht(
    pop: FinitePopulation, design: LabelingDesign, variance: VarianceMode = "poisson"
) -> Rectifier:
    """``N^-1 sum R_i e_i / xi_i``."""
    check_compatible(pop, design)
    return _weighted(
        _residuals(pop), design.indicators, design.inclusion_probs, pop.n_units, RectifierForm.HT, variance
    )


def rectifier_hajek(
    pop: FinitePopulation, design: LabelingDesign, variance: VarianceMode = "poisson"
) -> Rectifier:
    """``sum R_i e_i / xi_i / sum R_i / xi_i``, variance by linearization."""
    check_compatible(pop, design)
    return _weighted(
        _residuals(pop), design.indicators, design.inclusion_probs, pop.n_units, RectifierForm.HAJEK, variance
    )


def rectifier(
    pop: FinitePopulation,
    design: LabelingDesign,
    form: RectifierForm | str,
    variance: VarianceMode = "poisson",
) -> Rectifier:
    form = RectifierForm(form)
    if form is RectifierForm.UNWEIGHTED:
        return rectifier_unweighted(pop, design)
    if form is RectifierForm.HT:
        return rectifier_ht(pop, design, variance)
    return rectifier_hajek(pop, design, variance)


def prediction_term_variance(predictions: np.ndarray, labeled: np.ndarray) -> float:
    """Superpopulation variance of the prediction term: var(Yhat) over the unlabeled pool / its size."""
    pool = predictions[~labeled]
    if pool.shape[0] < 2:
        return 0.0
    return float(np.var(pool, ddof=1) / pool.shape[0])


def ppi_estimate(
    pop: FinitePopulation,
    design: LabelingDesign,
    form: RectifierForm | str = RectifierForm.HAJEK,
    variance: VarianceMode = "poisson",
    level: float = 0.95,
    *,
    superpopulation: bool = False,
) -> EstimateWithCI:
    """PPI point estimate ``mean(Yhat) - rectifier`` with a normal interval.

    By default the prediction term is the exact finite-population mean of the
    predictions and contributes no variance. With ``superpopulation=True`` the
    variance of the predictions over the unlabeled pool is added.
    """
    form = RectifierForm(form)
    rect = rectifier(pop, design, form, variance)
    yhat = pop.predictions
    var = rect.variance
    if superpopulation:
        var += prediction_term_variance(yhat, design.indicators)
    return EstimateWithCI.from_variance(float(np.mean(yhat)) - rect.value, var, _TAGS[form], level)


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    """Partition of labeled unit indices into folds numbered 1..K."""

    n_folds: int
    fold_of: dict[int, int]

    def members(self, k: int) -> np.ndarray:
        """Unit indices in fold ``k`` (1-based), ascending."""
        return np.array(sorted(i for i, f in self.fold_of.items() if f == k), dtype=int)

    def sizes(self) -> list[int]:
        counts = [0] * self.n_folds
        for f in self.fold_of.values():
            counts[f - 1] += 1
        return counts


def assign_folds(design: LabelingDesign, K: int, seed: int = 0) -> FoldAssignment:
    """Random balanced partition of the labeled units; sizes differ by at most one."""
    if K < 2:
        raise ValueError("need at least 2 folds")
    lab = design.labeled
    if lab.shape[0] < K:
        raise FoldTooSmall(f"{lab.shape[0]} labeled unit(s) cannot fill {K} folds")
    order = np.random.default_rng(seed).permutation(lab)
    fold_of = {int(i): int(pos % K) + 1 for pos, i in enumerate(order)}
    return FoldAssignment(K, fold_of)


def ols_trainer(X: np.ndarray, y: np.ndarray) -> Predictor:
    """Least squares with intercept; returns the fitted linear predictor."""
    A = np.column_stack([np.ones(X.shape[0]), X])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)

    def predict(Xnew: np.ndarray) -> np.ndarray:
        return coef[0] + np.asarray(Xnew, dtype=float) @ coef[1:]

    return predict


def logistic_trainer(X: np.ndarray, y: np.ndarray) -> Predictor:
    """Logistic fit for a binary outcome; predictions are fitted probabilities."""
    model = fit_logistic(X, y)

    def predict(Xnew: np.ndarray) -> np.ndarray:
        return predict_xi(model, Xnew, xi_floor=0.0)

    return predict


def cross_ppi(
    pop: FinitePopulation,
    design: LabelingDesign,
    K: int,
    trainer: Trainer,
    form: RectifierForm | str = RectifierForm.UNWEIGHTED,
    variance: VarianceMode = "poisson",
    level: float = 0.95,
    *,
    seed: int = 0,
    folds: Optional[FoldAssignment] = None,
    superpopulation: bool = False,
) -> EstimateWithCI:
    """Cross-fitted PPI averaged over K folds.

    For fold k the model is trained on the labeled units outside the fold,
    evaluated on the whole population for the prediction term, and its
    residuals on the fold's own units give the rectifier. Weighted forms use
    each unit's xi; for the HT form the fold is a random n_k / n_lab share of
    the labeled set, so its probabilities are scaled by that share.
    The variance is ``K^-2 sum_k Var(rectifier_k)``.
    """
    check_compatible(pop, design)
    form = RectifierForm(form)
    if design.n_lab < 2 * K:
        raise FoldTooSmall(f"cross-fitting with K={K} needs at least {2 * K} labeled units, got {design.n_lab}")
    if folds is None:
        folds = assign_folds(design, K, seed)
    X = pop.covariates
    N = pop.n_units
    lab = design.indicators
    n_lab = design.n_lab
    terms = []
    variances = []
    pred_sum = np.zeros(N)
    for k in range(1, folds.n_folds + 1):
        held = folds.members(k)
        if held.shape[0] < 2:
            raise FoldTooSmall(f"fold {k} has {held.shape[0]} labeled unit(s)")
        train = np.setdiff1d(design.labeled, held)
        f_k = trainer(X[train], pop.outcomes[train])
        preds_all = np.asarray(f_k(X), dtype=float)
        preds_held = np.asarray(f_k(X[held]), dtype=float)
        mask = np.zeros(N, dtype=bool)
        mask[held] = True
        e = np.zeros(N)
        e[held] = preds_held - pop.outcomes[held]
        if form is RectifierForm.UNWEIGHTED:
            rect = _unweighted(e, mask)
        else:
            probs = design.inclusion_probs
            if form is RectifierForm.HT:
                probs = probs * (held.shape[0] / n_lab)
            rect = _weighted(e, mask, probs, N, form, variance)
        terms.append(float(np.mean(preds_all)) - rect.value)
        variances.append(rect.variance)
        pred_sum += preds_all
    n_folds = folds.n_folds
    var = float(np.sum(variances)) / n_folds**2
    if superpopulation:
        var += prediction_term_variance(pred_sum / n_folds, lab)
    return EstimateWithCI.from_variance(float(np.mean(terms)), var, EstimatorTag.CROSS_PPI, level)
