import numpy as np
import pytest

from qzeno import LatticeModel, MeasurementProtocol, run_stroboscopic


@pytest.fixture(scope="session")
def strobo_101():
    """N=101, tau=0.1, start on the detector, 400 measurements."""
    return run_stroboscopic(LatticeModel(50), MeasurementProtocol(0.1, 400), 0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def acceptance_log(request):
    return request.config.acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if config.acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in config.acceptance_lines:
            terminalreporter.write_line(line)
