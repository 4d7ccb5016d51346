import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sigcn.rng import SplitMix64  # noqa: E402


@pytest.fixture
def rng():
    return SplitMix64(20240601)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(':'))):
            terminalreporter.write_line(line)
