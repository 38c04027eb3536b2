import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_stable(rng, p=2, radius=0.9):
    """Random real p x p matrix with spectral radius at most ``radius``."""
    a = rng.normal(size=(p, p))
    rho = max(abs(np.linalg.eigvals(a)))
    return a * (radius * rng.uniform(0.05, 1.0) / rho)


def random_spd(rng, p=2):
    m = rng.normal(size=(p, p))
    return m @ m.T + 0.2 * np.eye(p)
