"""Dispatch from estimator tags to estimator calls with shared options."""

from __future__ import annotations

from typing import Iterable, Optional

from .core_types import EstimateWithCI, EstimatorTag, FinitePopulation, LabelingDesign, VarianceMode
from .design_estimators import bin_smooth, classic_mean, greg, hajek, horvitz_thompson
from .ppi import RectifierForm, Trainer, cross_ppi, ols_trainer, ppi_estimate

# the five estimators compared in the informative-labeling experiments
TABLE_ESTIMATORS: tuple[EstimatorTag, ...] = (
    EstimatorTag.CLASSIC,
    EstimatorTag.HT,
    EstimatorTag.HAJEK,
    EstimatorTag.PPI,
    EstimatorTag.PPI_HAJEK,
)


def parse_tags(names: Iterable[str]) -> tuple[EstimatorTag, ...]:
    """Tags from their string values, case-insensitively."""
    lookup = {t.value.lower(): t for t in EstimatorTag}
    out = []
    for name in names:
        key = name.strip().lower()
        if key not in lookup:
            raise ValueError(f"unknown estimator {name!r}; choose from {', '.join(t.value for t in EstimatorTag)}")
        out.append(lookup[key])
    return tuple(out)


def run_estimator(
    tag: EstimatorTag | str,
    pop: FinitePopulation,
    design: LabelingDesign,
    *,
    variance: VarianceMode = "poisson",
    level: float = 0.95,
    superpopulation: bool = False,
    trainer: Optional[Trainer] = None,
    cross_folds: int = 5,
    cross_form: RectifierForm | str = RectifierForm.HAJEK,
    seed: int = 0,
) -> EstimateWithCI:
    tag = EstimatorTag(tag)
    if tag is EstimatorTag.CLASSIC:
        return classic_mean(pop, design, level)
    if tag is EstimatorTag.HT:
        return horvitz_thompson(pop, design, variance, level)
    if tag is EstimatorTag.HAJEK:
        return hajek(pop, design, variance, level)
    if tag is EstimatorTag.GREG:
        return greg(pop, design, variance, level)
    if tag is EstimatorTag.BIN_SMOOTH:
        return bin_smooth(pop, design, None, variance, level)
    if tag is EstimatorTag.CROSS_PPI:
        return cross_ppi(
            pop,
            design,
            cross_folds,
            trainer or ols_trainer,
            cross_form,
            variance,
            level,
            seed=seed,
            superpopulation=superpopulation,
        )
    form = {
        EstimatorTag.PPI: RectifierForm.UNWEIGHTED,
        EstimatorTag.PPI_HT: RectifierForm.HT,
        EstimatorTag.PPI_HAJEK: RectifierForm.HAJEK,
    }[tag]
    return ppi_estimate(pop, design, form, variance, level, superpopulation=superpopulation)
