import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from viscosity_lab import build_disk_domain

settings.register_profile(
    "lab",
    deadline=None,
    max_examples=10,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("lab")

# Acceptance outcomes, keyed by criterion, reported after the session.
ACCEPTANCE_LINES: dict = {}


@pytest.fixture(scope="session")
def d16():
    return build_disk_domain(16, 64)


@pytest.fixture(scope="session")
def d12():
    return build_disk_domain(12, 48)


@pytest.fixture(scope="session")
def d8():
    return build_disk_domain(8, 32)


def vec(*components):
    return np.stack([np.asarray(c, dtype=float) for c in components])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
