"""Logistic-regression propensity model for inclusion probabilities.

The fit is Newton-Raphson in its iteratively-reweighted-least-squares form,
with step halving so that the log-likelihood never decreases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from .errors import DegenerateResponse, DimensionMismatch, NonFiniteValue, SingularInformation

XI_FLOOR = 1e-6
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100
_COND_LIMIT = 1e13


@dataclass(frozen=True, eq=False)
class LogisticModel:
    """Fitted logistic model; ``coefficients[0]`` is the intercept."""

    coefficients: np.ndarray
    converged: bool
    n_iterations: int
    loglik_trace: tuple[float, ...] = field(default=(), repr=False)

    @property
    def n_features(self) -> int:
        return int(self.coefficients.shape[0] - 1)

    @property
    def loglik(self) -> float:
        return self.loglik_trace[-1] if self.loglik_trace else float("nan")


def _design_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DimensionMismatch(f"covariates must be a matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteValue("covariates contain non-finite values")
    return np.column_stack([np.ones(X.shape[0]), X])


def log_likelihood(coefficients, X, R) -> float:
    """Bernoulli log-likelihood of ``R`` under ``sigmoid(b0 + X b)``."""
    return _loglik(_design_matrix(X), np.asarray(R, dtype=float), np.asarray(coefficients, dtype=float))


def fit_logistic(X, R, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> LogisticModel:
    """Maximum-likelihood logistic regression of ``R`` on ``X`` (intercept added).

    ``converged`` is True iff the largest absolute coefficient update drops
    below ``tol`` within ``max_iter`` iterations. Separable data leave the
    model unconverged rather than raising.

    Raises
    ------
    DegenerateResponse
        ``R`` is all zeros or all ones.
    SingularInformation
        The information matrix is singular at the starting point, i.e. the
        covariates are collinear.
    """
    A = _design_matrix(X)
    r = np.asarray(R, dtype=float).ravel()
    if r.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"X has {A.shape[0]} rows but R has length {r.shape[0]}")
    if not np.all((r == 0.0) | (r == 1.0)):
        raise ValueError("R must contain only 0/1 values")
    if r.min() == r.max():
        raise DegenerateResponse("R must contain both zeros and ones")

    beta = np.zeros(A.shape[1])
    ll = _loglik(A, r, beta)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(A @ beta)
        w = p * (1.0 - p)
        info = A.T @ (w[:, None] * A)
        if not np.all(np.isfinite(info)) or np.linalg.cond(info) > _COND_LIMIT:
            if it == 1:
                raise SingularInformation("information matrix is singular; covariates are collinear")
            # weights have collapsed: the MLE is at infinity
            break
        step = np.linalg.solve(info, A.T @ (r - p))
        if np.max(np.abs(step)) < tol:
            candidate = beta + step
            ll_new = _loglik(A, r, candidate)
            # at the optimum the change is rounding noise; keep the trace monotone
            if ll_new >= ll:
                beta, ll = candidate, ll_new
                trace.append(ll)
            converged = True
            break
        # step halving keeps the log-likelihood monotone
        scale = 1.0
        while True:
            candidate = beta + scale * step
            ll_new = _loglik(A, r, candidate)
            if ll_new >= ll or scale < 1e-10:
                break
            scale *= 0.5
        if ll_new < ll:
            break
        beta = candidate
        ll = ll_new
        trace.append(ll)
        if np.max(np.abs(scale * step)) < tol:
            converged = True
            break
    if not np.all(np.isfinite(beta)):
        converged = False
    beta.setflags(write=False)
    return LogisticModel(beta, converged, it, tuple(trace))


def _loglik(A: np.ndarray, r: np.ndarray, beta: np.ndarray) -> float:
    eta = A @ beta
    return float(np.sum(r * log_expit(eta) + (1.0 - r) * log_expit(-eta)))


def predict_xi(model: LogisticModel, X, xi_floor: float = XI_FLOOR) -> np.ndarray:
    """Fitted probabilities clamped to ``[xi_floor, 1]``."""
    A = _design_matrix(X)
    if A.shape[1] != model.coefficients.shape[0]:
        raise DimensionMismatch(
            f"model expects {model.n_features} covariate(s), got {A.shape[1] - 1}"
        )
    return np.clip(expit(A @ model.coefficients), xi_floor, 1.0)


def estimate_inclusion_probs(X, R, xi_floor: float = XI_FLOOR) -> np.ndarray:
    """Fit the propensity model on ``(R, X)`` and return the clamped fitted probabilities."""
    return predict_xi(fit_logistic(X, R), X, xi_floor=xi_floor)
