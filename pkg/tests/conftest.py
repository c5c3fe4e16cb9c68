import numpy as np
import pytest

from cutcell_xdiff.model import TwoPhaseParams, kappa_from_pairs, tc1_params

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def tc1():
    return tc1_params()


@pytest.fixture
def rng():
    return np.random.default_rng(20231015)


def two_species(kappa12=0.2, exp_s=(1.0, 1.0), exp_g=(1.0, 1.0)):
    k = kappa_from_pairs(2, {(0, 1): kappa12})
    return TwoPhaseParams.from_exp(k, k, exp_s, exp_g)


def random_simplex(rng, n, size=None, low=1e-3):
    """Strictly positive points of the probability simplex."""
    shape = (n,) if size is None else (size, n)
    x = rng.uniform(low, 1.0, shape) ** 3
    return x / x.sum(axis=-1, keepdims=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
