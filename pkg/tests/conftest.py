import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eeplan.pathloss import PathLossModel  # noqa: E402
from eeplan.power import SystemConfig  # noqa: E402


@pytest.fixture
def config():
    return SystemConfig()


@pytest.fixture
def default_model():
    return PathLossModel.default()


@pytest.fixture
def single_slope():
    return PathLossModel.single_slope(4.0)


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record and print one acceptance line; returns the verdict."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"CRITERION {number:>2} {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _CRITERIA[number] = line
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
