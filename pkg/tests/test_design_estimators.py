import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import poisson_patterns, random_case
from ppi_ipw.core_types import build_design, build_population
from ppi_ipw.design_estimators import (
    BinStrategy,
    bin_smooth,
    bin_spec_from_edges,
    classic_mean,
    default_bin_count,
    greg,
    greg_coefficients,
    hajek,
    horvitz_thompson,
    ht_mean,
    make_bins,
)
from ppi_ipw.errors import BinCoverageError, NoLabeledUnits, SingularInformation


# ---- hand examples ----------------------------------------------------------

def test_classic_two_points():
    pop = build_population([0.0, 1.0], [0.0, 1.0])
    e = classic_mean(pop, build_design([1.0, 1.0], [1, 1]))
    assert e.estimate == 0.5
    assert e.std_error == pytest.approx(0.5, abs=1e-15)


def test_classic_constant_outcomes_degenerate():
    pop = build_population(np.zeros(4), [1.0, 1.0, 1.0, 5.0])
    e = classic_mean(pop, build_design([0.5] * 4, [1, 1, 1, 0]))
    assert e.estimate == 1.0 and e.degenerate


def test_classic_needs_two_labels():
    pop = build_population(np.zeros(3), [1.0, 2.0, 3.0])
    with pytest.raises(NoLabeledUnits):
        classic_mean(pop, build_design([0.5] * 3, [1, 0, 0]))


def test_hajek_hand_example():
    pop = build_population(np.zeros(3), [1.0, 2.0, 7.0])
    e = hajek(pop, build_design([0.9, 0.1, 0.5], [1, 1, 0]))
    assert e.estimate == pytest.approx(1.9, abs=1e-12)


def test_ht_census():
    pop = build_population(np.arange(5.0), [3.0, 1.0, 4.0, 1.0, 5.0])
    for mode in ("poisson", "iid"):
        e = horvitz_thompson(pop, build_design(np.ones(5), np.ones(5)), mode)
        assert e.estimate == pytest.approx(2.8, abs=1e-15)
        if mode == "poisson":
            assert e.std_error == 0.0


def test_ht_sixteen_patterns():
    Y = np.array([1.0, 2.0, 3.0, 4.0])
    xi = np.full(4, 0.5)
    total = sum(w * ht_mean(Y, R, xi, 4)[0] for R, w in poisson_patterns(xi))
    assert total == pytest.approx(2.5, abs=1e-14)


def test_ht_poisson_variance_formula():
    Y = np.array([1.0, 2.0, 7.0, 3.0])
    xi = np.array([0.9, 0.1, 0.5, 0.4])
    R = np.array([1, 1, 0, 1], dtype=bool)
    e = horvitz_thompson(build_population(np.zeros(4), Y), build_design(xi, R))
    expected = np.sum(R * (1 - xi) * Y**2 / xi**2) / 16
    assert e.std_error**2 == pytest.approx(expected, rel=1e-12)


def test_hajek_poisson_variance_formula():
    Y = np.array([1.0, 2.0, 7.0, 3.0])
    xi = np.array([0.9, 0.1, 0.5, 0.4])
    R = np.array([1, 1, 0, 1], dtype=bool)
    e = hajek(build_population(np.zeros(4), Y), build_design(xi, R))
    n_hat = np.sum(R / xi)
    expected = np.sum(R * (1 - xi) * (Y - e.estimate) ** 2 / xi**2) / n_hat**2
    assert e.std_error**2 == pytest.approx(expected, rel=1e-12)


def test_unknown_variance_mode():
    pop = build_population(np.zeros(3), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        horvitz_thompson(pop, build_design([0.5] * 3, [1, 1, 0]), "bootstrap")


def test_no_labels_raise():
    pop = build_population(np.zeros(3), [1.0, 2.0, 3.0])
    d = build_design([0.5] * 3, [0, 0, 0])
    for fn in (horvitz_thompson, hajek, bin_smooth):
        with pytest.raises(NoLabeledUnits):
            fn(pop, d)


# ---- design unbiasedness -----------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_ht_exhaustive_unbiasedness(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(2, 13))
    Y = rng.normal(size=N) * 3
    xi = rng.uniform(0.05, 0.95, size=N)
    total = sum(w * ht_mean(Y, R, xi, N)[0] for R, w in poisson_patterns(xi))
    assert total == pytest.approx(Y.mean(), abs=1e-12)


def test_ht_poisson_variance_is_unbiased():
    rng = np.random.default_rng(9)
    N = 8
    Y = rng.normal(size=N)
    xi = rng.uniform(0.2, 0.9, size=N)
    mean_var = sum(w * ht_mean(Y, R, xi, N)[1] for R, w in poisson_patterns(xi))
    true_var = np.sum((1 - xi) * Y**2 / xi) / N**2
    assert mean_var == pytest.approx(true_var, rel=1e-12)


# ---- reductions ---------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_hajek_equals_classic_constant_xi(seed):
    rng = np.random.default_rng(seed)
    N = 40
    pop = build_population(rng.normal(size=N), rng.normal(size=N))
    c = rng.uniform(0.1, 1.0)
    d = build_design(np.full(N, c), rng.random(N) < 0.5)
    assert hajek(pop, d).estimate == pytest.approx(classic_mean(pop, d).estimate, abs=1e-12)


def test_greg_exact_for_linear_outcome(rng):
    X = rng.normal(size=(30, 2))
    Y = 1.5 + X @ [2.0, -0.5]
    pop = build_population(X, Y)
    for seed in range(5):
        r = np.random.default_rng(seed)
        xi = r.uniform(0.2, 0.8, size=30)
        R = r.random(30) < xi
        if R.sum() < 4:
            continue
        assert greg(pop, build_design(xi, R)).estimate == pytest.approx(pop.mean, abs=1e-12)


def test_greg_zero_slope_equals_ht(rng):
    pop, d = random_case(rng, 25, p=2, with_preds=False)
    ht = horvitz_thompson(pop, d).estimate
    assert greg(pop, d, calibrate_intercept=False, coefficients=[0.0, 0.0]).estimate == pytest.approx(ht, abs=1e-12)
    assert greg(pop, d, coefficients=[0.0, 0.0, 0.0]).estimate == pytest.approx(ht, abs=1e-12)


def test_greg_zero_variance_covariate_equals_ht(rng):
    N = 20
    pop = build_population(np.full(N, 3.0), rng.normal(size=N))
    xi = rng.uniform(0.2, 0.9, N)
    d = build_design(xi, rng.random(N) < xi)
    assert greg_coefficients(pop, d)[1] == 0.0
    e = greg(pop, d, calibrate_intercept=False)
    assert e.estimate == pytest.approx(horvitz_thompson(pop, d).estimate, abs=1e-12)


def greg_by_g_weights(X, Y, xi, R):
    """Calibration-weight form: N^-1 sum R g_i y_i / xi_i."""
    N = len(Y)
    A = np.column_stack([np.ones(N), X])
    T = A.sum(axis=0)
    T_hat = np.zeros(A.shape[1])
    M = np.zeros((A.shape[1], A.shape[1]))
    for i in range(N):
        if R[i]:
            T_hat += A[i] / xi[i]
            M += np.outer(A[i], A[i]) / xi[i]
    lam = np.linalg.solve(M, T - T_hat)
    return sum((1.0 + lam @ A[i]) * Y[i] / xi[i] for i in range(N) if R[i]) / N


def test_greg_matches_independent_oracle():
    rng = np.random.default_rng(42)
    X = rng.normal(size=6)
    Y = 2 * X + rng.normal(0, 0.3, size=6)
    xi = np.array([0.9, 0.6, 0.8, 0.5, 0.7, 0.95])
    R = np.array([1, 1, 1, 0, 1, 1], dtype=bool)
    got = greg(build_population(X, Y), build_design(xi, R)).estimate
    assert got == pytest.approx(greg_by_g_weights(X[:, None], Y, xi, R), abs=1e-12)


def test_greg_collinear_raises():
    X = np.arange(12.0)
    pop = build_population(np.column_stack([X, 2 * X]), np.sin(X))
    with pytest.raises(SingularInformation):
        greg(pop, build_design(np.full(12, 0.5), np.ones(12)))


def test_greg_needs_p_plus_two_labels():
    pop = build_population(np.arange(6.0), np.arange(6.0))
    with pytest.raises(NoLabeledUnits):
        greg(pop, build_design(np.full(6, 0.5), [1, 1, 0, 0, 0, 0]))


# ---- binning ------------------------------------------------------------------

def test_make_bins_equal_width_example():
    spec = make_bins([0.2, 0.4, 0.6, 0.8], 2)
    np.testing.assert_allclose(spec.edges, [0.2, 0.5, 0.8])
    np.testing.assert_allclose(spec.midpoints, [0.35, 0.65])


def test_make_bins_degenerate():
    for B in (1, 3, 10):
        spec = make_bins(np.full(7, 0.3), B)
        assert spec.n_bins == 1
        np.testing.assert_allclose(spec.midpoints, [0.3])
        assert np.all(spec.assign(np.full(7, 0.3)) == 0)


def test_make_bins_equal_count():
    xi = np.random.default_rng(5).uniform(0.1, 0.9, 100)
    spec = make_bins(xi, 10, BinStrategy.EQUAL_COUNT)
    assert np.bincount(spec.assign(xi), minlength=10).tolist() == [10] * 10


def test_bin_assign_right_closed_and_coverage():
    spec = bin_spec_from_edges([0.0, 0.5, 1.0])
    np.testing.assert_array_equal(spec.assign([0.0, 0.5, 0.99, 1.0]), [0, 1, 1, 1])
    with pytest.raises(BinCoverageError):
        spec.assign([1.2])


def test_default_bin_count():
    assert default_bin_count(1) == 1
    assert default_bin_count(10) == 4
    assert default_bin_count(100) == 10


def test_bin_smooth_single_bin_equals_ht(rng):
    N = 30
    pop = build_population(rng.normal(size=N), rng.normal(size=N))
    d = build_design(np.full(N, 0.4), rng.random(N) < 0.4)
    spec = make_bins(d.inclusion_probs, 1)
    for mode in ("poisson", "iid"):
        a = bin_smooth(pop, d, spec, mode)
        b = horvitz_thompson(pop, d, mode)
        assert a.estimate == pytest.approx(b.estimate, abs=1e-12)
        assert a.std_error == pytest.approx(b.std_error, abs=1e-12)


def test_bin_smooth_matches_stratified_ht():
    rng = np.random.default_rng(20)
    N, B = 20, 4
    mids = np.array([0.2, 0.4, 0.6, 0.8])
    stratum = np.repeat(np.arange(B), N // B)
    rng.shuffle(stratum)
    xi = mids[stratum]
    Y = rng.normal(size=N) + stratum
    R = rng.random(N) < xi
    spec = bin_spec_from_edges([0.1, 0.3, 0.5, 0.7, 0.9])
    got = bin_smooth(build_population(np.zeros(N), Y), build_design(xi, R), spec).estimate
    # population share of each stratum times its within-stratum HT mean
    expected = 0.0
    for b in range(B):
        in_b = stratum == b
        N_b = in_b.sum()
        expected += (N_b / N) * np.sum(Y[in_b & R] / mids[b]) / N_b
    assert got == pytest.approx(expected, abs=1e-12)


def test_bin_smooth_each_unit_own_bin():
    xi = np.array([0.2, 0.4, 0.6, 0.8, 1.0])
    Y = np.array([1.0, -2.0, 0.5, 3.0, 4.0])
    R = np.array([1, 0, 1, 1, 1], dtype=bool)
    spec = bin_spec_from_edges([0.1, 0.3, 0.5, 0.7, 0.9, 1.1])
    np.testing.assert_allclose(spec.midpoints, xi)
    got = bin_smooth(build_population(np.zeros(5), Y), build_design(xi, R), spec).estimate
    assert got == pytest.approx(np.sum(R * Y / xi) / 5, abs=1e-12)


def test_bin_smooth_default_bins(rng):
    pop, d = random_case(rng, 60, with_preds=False)
    e = bin_smooth(pop, d)
    assert np.isfinite(e.estimate) and e.std_error > 0


# ---- properties ------------------------------------------------------------------

ESTIMATORS = {
    "classic": lambda p, d: classic_mean(p, d).estimate,
    "ht": lambda p, d: horvitz_thompson(p, d).estimate,
    "hajek": lambda p, d: hajek(p, d).estimate,
    "greg": lambda p, d: greg(p, d).estimate,
    "bin": lambda p, d: bin_smooth(p, d).estimate,
}


def _case(seed, N=40):
    rng = np.random.default_rng(seed)
    pop, d = random_case(rng, N, p=1, with_preds=False)
    if d.n_lab < 4:
        d = build_design(d.inclusion_probs, np.ones(N))
    return pop, d


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_permutation_invariance(seed):
    pop, d = _case(seed)
    perm = np.random.default_rng(seed + 1).permutation(pop.n_units)
    pop2 = pop.subset(perm)
    d2 = build_design(d.inclusion_probs[perm], d.indicators[perm])
    for name, fn in ESTIMATORS.items():
        assert fn(pop2, d2) == pytest.approx(fn(pop, d), abs=1e-10), name


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 5).filter(lambda a: abs(a) > 0.1), st.floats(-10, 10))
def test_affine_equivariance(seed, a, b):
    pop, d = _case(seed)
    shifted = pop.with_outcomes(a * pop.outcomes + b)
    for name in ("classic", "hajek", "greg"):
        fn = ESTIMATORS[name]
        assert fn(shifted, d) == pytest.approx(a * fn(pop, d) + b, abs=1e-9), name
    # with a known N the HT forms shift by b times the HT estimate of 1
    one = ht_mean(np.ones(pop.n_units), d.indicators, d.inclusion_probs, pop.n_units)[0]
    for name in ("ht",):
        fn = ESTIMATORS[name]
        assert fn(shifted, d) == pytest.approx(a * fn(pop, d) + b * one, abs=1e-9)
    scaled = pop.with_outcomes(a * pop.outcomes)
    assert ESTIMATORS["bin"](scaled, d) == pytest.approx(a * ESTIMATORS["bin"](pop, d), abs=1e-9)
