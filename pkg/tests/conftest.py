import math

import pytest

from wazewski import profiles
from wazewski.models import PendulumModel


@pytest.fixture
def still_pendulum():
    return PendulumModel(profiles.zero())


@pytest.fixture
def driven_pendulum():
    return PendulumModel(profiles.sinusoid(0.2))


@pytest.fixture
def half_pi():
    return 0.5 * math.pi


CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(label, ok, detail)."""

    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
