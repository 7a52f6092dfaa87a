import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criterion_lines = pytest.StashKey[list]()


@pytest.fixture
def criterion_log(request):
    return request.config.stash.setdefault(_criterion_lines, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_criterion_lines, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
