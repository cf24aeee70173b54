import numpy as np
import pytest

from risdim.config import RunConfig
from risdim.geometry import RisPanel, Scenario
from risdim.precoding import LinkBudget, uniform_power


def random_channel(rng, k, m):
    return (rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))) / np.sqrt(2)


@pytest.fixture
def ref_config():
    return RunConfig.default()


@pytest.fixture
def ref_scenario(ref_config):
    return ref_config.scenario()


@pytest.fixture
def small_scenario():
    """BS and two users in front of a z = 0 RIS."""
    return Scenario(
        bs_position=(-1.0, 0.0, 2.0),
        user_positions=[(1.0, 0.0, 2.0), (0.5, 1.0, 3.0)],
        ris_center=(0.0, 0.0, 0.0),
        ris_normal=(0.0, 0.0, 1.0),
        wavelength=0.05,
        antenna_gain=1.0,
        num_antennas=4,
        num_users=2,
    )


@pytest.fixture
def unit_budget():
    def make(k, snr=1.0):
        return LinkBudget(snr, 1.0, uniform_power(k))
    return make


@pytest.fixture
def panel256():
    return RisPanel(256)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
