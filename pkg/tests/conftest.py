import numpy as np
import pytest

from wsbkit.integrate import IntegratorConfig

EARTH_MOON = 0.01215
SUN_JUPITER = 0.00095


@pytest.fixture
def cfg():
    return IntegratorConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# filled by the acceptance suite, echoed after the run even when output is captured
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
