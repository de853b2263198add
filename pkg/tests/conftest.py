import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from weednav import Configuration, dubins_sample, dubins_shortest  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def straight_5m():
    return dubins_sample(dubins_shortest(Configuration(0, 0, 0), Configuration(5, 0, 0), 0.5))


@pytest.fixture(scope="session")
def curved_segment():
    return dubins_sample(dubins_shortest(Configuration(0, 0, 0), Configuration(2.0, 1.5, 2.0), 0.55))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])
