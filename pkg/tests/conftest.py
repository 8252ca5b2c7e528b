import pytest

from homsim.crystal import CrystalConfig, default_material
from homsim.units import GaussianSpectrum

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def kdp():
    return default_material()


@pytest.fixture(scope="session")
def paper_crystal(kdp):
    return CrystalConfig(kdp, 15.0, 67.8)


@pytest.fixture(scope="session")
def pump():
    return GaussianSpectrum(415.0, 2.3)


@pytest.fixture(scope="session")
def signal():
    return GaussianSpectrum(830.0, 9.3)


@pytest.fixture(scope="session")
def lo():
    return GaussianSpectrum(830.0, 7.1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
