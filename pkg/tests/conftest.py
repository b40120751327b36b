from pathlib import Path

import pytest

from stochpower.channel import FiniteMarkovProcess
from stochpower.game import GameConfig

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


@pytest.fixture
def half_rate():
    """K=2, R=0.5, sigma2=1, p_max=10."""
    return GameConfig(2, 0.5, 1.0, 10.0, 0.05)


@pytest.fixture
def single_state():
    return FiniteMarkovProcess([1.0], [[1.0]], 2, seed=0)


@pytest.fixture
def two_state():
    """The default ratio-4 chain: states {0.25, 1}, persistence 0.9."""
    return FiniteMarkovProcess([0.25, 1.0], [[0.9, 0.1], [0.1, 0.9]], 2, seed=0)


@pytest.fixture(scope="session")
def default_config_path():
    return CONFIGS / "default.yaml"


@pytest.fixture(scope="session")
def single_config_path():
    return CONFIGS / "single_state.yaml"


@pytest.fixture(scope="session")
def default_run():
    from stochpower.config import load_config

    return load_config(CONFIGS / "default.yaml")


@pytest.fixture(scope="session")
def default_region(default_run):
    """Full G=6 enumeration of the default two-player instance (about 1.7M profiles)."""
    from stochpower.region import enumerate_region

    return enumerate_region(default_run.process, default_run.game, G=default_run.analysis.grid)


_CRITERIA = []


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.append((props["criterion"], report.outcome, props.get("measured", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, measured in _CRITERIA:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {label}" + (f"  [{measured}]" if measured else ""))
