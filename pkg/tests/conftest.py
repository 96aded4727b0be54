import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_host_weights(n, seed, q=0.3):
    """Centered adjacency of a G(n, q) sample (zero diagonal)."""
    rng = np.random.default_rng(seed)
    A = np.triu((rng.random((n, n)) < q).astype(float), 1)
    A = A + A.T
    W = A - q
    np.fill_diagonal(W, 0.0)
    return A, W


@pytest.fixture
def tmp(tmp_path):
    return tmp_path


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
