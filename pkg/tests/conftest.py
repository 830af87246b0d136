import itertools

import numpy as np
import pytest

from ppi_ipw.core_types import build_design, build_population


def poisson_patterns(xi):
    """Every label pattern of a Poisson design with its probability."""
    xi = np.asarray(xi, dtype=float)
    for bits in itertools.product((False, True), repeat=xi.shape[0]):
        R = np.array(bits)
        yield R, float(np.prod(np.where(R, xi, 1.0 - xi)))


def random_case(rng, N, p=1, with_preds=True):
    X = rng.normal(size=(N, p))
    Y = X @ rng.normal(size=p) + rng.normal(size=N)
    Yhat = Y + rng.normal(0.3, 0.5, size=N) if with_preds else None
    xi = rng.uniform(0.1, 0.9, size=N)
    R = rng.random(N) < xi
    return build_population(X, Y, Yhat), build_design(xi, R)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(REPORT, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
