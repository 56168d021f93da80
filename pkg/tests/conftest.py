import sys

import numpy as np
import pytest

from gaitlab import GaitParams, PhysicalParams


@pytest.fixture(scope="session")
def robot():
    return PhysicalParams()


@pytest.fixture(scope="session")
def gait1():
    return GaitParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_states(rng, n, beta=None):
    """Random configurations and velocities; the stance knee is locked when ``beta`` is given."""
    q = rng.uniform(-1.0, 1.0, size=(n, 6))
    q[:, :2] *= 0.3
    if beta is not None:
        q[:, 2] = q[:, 3] + beta
    qd = rng.uniform(-2.0, 2.0, size=(n, 6))
    return q, qd


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
