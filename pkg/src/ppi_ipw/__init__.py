"""Prediction-powered inference with inverse-probability-weighted rectifiers.

Design-based estimators (classic, Horvitz-Thompson, Hajek, GREG, binning-
smoothing), PPI with unweighted / HT / Hajek rectifiers and cross-fitting, a
logistic propensity model, a randomized trapezoid integrator, and the
simulation and data pipelines that compare them.
"""

__version__ = "0.1.0"

from .core_types import (
    EstimateWithCI,
    EstimatorTag,
    FinitePopulation,
    LabelingDesign,
    build_design,
    build_population,
)
from .design_estimators import (
    BinSpec,
    BinStrategy,
    bin_smooth,
    classic_mean,
    greg,
    hajek,
    horvitz_thompson,
    make_bins,
)
from .ppi import (
    FoldAssignment,
    Rectifier,
    RectifierForm,
    assign_folds,
    cross_ppi,
    ppi_estimate,
    rectifier_hajek,
    rectifier_ht,
    rectifier_unweighted,
)
from .propensity import LogisticModel, fit_logistic, predict_xi
from .qis import QisProblem, mc_rectangle_estimate, qis_estimate, rate_report
from .simulate import SimulationConfig, SimulationReport, first_k_intervals, run_simulation

__all__ = [
    "BinSpec",
    "BinStrategy",
    "EstimateWithCI",
    "EstimatorTag",
    "FinitePopulation",
    "FoldAssignment",
    "LabelingDesign",
    "LogisticModel",
    "QisProblem",
    "Rectifier",
    "RectifierForm",
    "SimulationConfig",
    "SimulationReport",
    "assign_folds",
    "bin_smooth",
    "build_design",
    "build_population",
    "classic_mean",
    "cross_ppi",
    "first_k_intervals",
    "fit_logistic",
    "greg",
    "hajek",
    "horvitz_thompson",
    "make_bins",
    "mc_rectangle_estimate",
    "ppi_estimate",
    "predict_xi",
    "qis_estimate",
    "rate_report",
    "rectifier_hajek",
    "rectifier_ht",
    "rectifier_unweighted",
    "run_simulation",
]
