import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppi_ipw.errors import MissingTruth
from ppi_ipw.qis import (
    BUILTIN_PROBLEMS,
    QisProblem,
    loglog_slope,
    mc_rectangle_estimate,
    qis_estimate,
    rate_report,
    trapezoid_on_nodes,
)

GRID = [8, 16, 32, 64, 128, 256, 512, 1024]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 2000), st.integers(0, 2**32), st.floats(-100, 100))
def test_constant_exact(n, seed, c):
    prob = QisProblem(lambda s: c, c)
    assert qis_estimate(prob, n, seed) == c
    assert mc_rectangle_estimate(prob, n, seed) == c


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 2000), st.integers(0, 2**32), st.floats(-10, 10), st.floats(-10, 10))
def test_linear_exact(n, seed, a, b):
    prob = QisProblem(lambda s: a * s + b)
    assert qis_estimate(prob, n, seed) == pytest.approx(a / 2 + b, abs=1e-14 * max(1.0, abs(a), abs(b)))


def test_sorting_invariance():
    rng = np.random.default_rng(0)
    u = rng.random(50)
    fn = BUILTIN_PROBLEMS["exp"].quantile_fn
    assert trapezoid_on_nodes(fn, u) == trapezoid_on_nodes(fn, rng.permutation(u))


def test_endpoints_not_duplicated():
    fn = lambda s: s**2
    assert trapezoid_on_nodes(fn, [0.0, 0.5, 1.0]) == trapezoid_on_nodes(fn, [0.5])


def test_equispaced_error_bound():
    # composite trapezoid on s^2: error = h^2 / 6 exactly, within the bound max|f''| h^2 / 12 * (b - a)
    for m in (4, 16, 64):
        h = 1.0 / m
        nodes = np.linspace(0.0, 1.0, m + 1)
        err = abs(trapezoid_on_nodes(lambda s: s**2, nodes) - 1.0 / 3.0)
        assert err <= 2.0 / 12.0 * h**2 + 1e-15
        assert err == pytest.approx(h**2 / 6.0, rel=1e-9)


def test_determinism():
    prob = BUILTIN_PROBLEMS["s2"]
    assert qis_estimate(prob, 100, 7) == qis_estimate(prob, 100, 7)
    assert mc_rectangle_estimate(prob, 100, 7) == mc_rectangle_estimate(prob, 100, 7)
    assert qis_estimate(prob, 100, 7) != qis_estimate(prob, 100, 8)


def test_mc_linear_unbiased_variance():
    prob = QisProblem(lambda s: s, 0.5)
    n = 10
    est = np.array([mc_rectangle_estimate(prob, n, s) for s in range(4000)])
    assert abs(est.mean() - 0.5) < 4 * math.sqrt(1 / (12 * n) / 4000)
    assert est.var() == pytest.approx(1 / (12 * n), rel=0.1)


def test_rate_constant_undefined_slopes():
    rep = rate_report(BUILTIN_PROBLEMS["const"], [8, 16, 32], 20)
    assert all(r.mse_qis == 0 and r.mse_mc == 0 for r in rep.rows)
    assert rep.slope_qis is None and rep.slope_mc is None


def test_rate_monotone_s2():
    rep = rate_report(BUILTIN_PROBLEMS["s2"], [16, 64, 256], 100)
    mses = [r.mse_qis for r in rep.rows]
    assert mses[0] > mses[1] > mses[2]


@pytest.mark.parametrize("name", ["s2", "exp"])
def test_rate_slopes(name):
    rep = rate_report(BUILTIN_PROBLEMS[name], GRID, 500)
    assert rep.slope_qis <= -3.5
    assert -1.3 <= rep.slope_mc <= -0.7


def test_rate_errors():
    with pytest.raises(MissingTruth):
        rate_report(QisProblem(np.sqrt), [8, 16], 5)
    with pytest.raises(ValueError):
        rate_report(BUILTIN_PROBLEMS["s2"], [16, 8], 5)
    with pytest.raises(ValueError):
        qis_estimate(BUILTIN_PROBLEMS["s2"], 0, 1)


def test_loglog_slope():
    ns = np.array([10.0, 100.0, 1000.0])
    assert loglog_slope(ns, 3.0 * ns**-2.0) == pytest.approx(-2.0)
    assert loglog_slope(ns, [1.0, 0.0, 1.0]) is None
