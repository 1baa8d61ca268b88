import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_LINES = {}


@pytest.fixture
def criterion():
    """Record one verdict line per acceptance criterion."""

    def record(number, ok, detail, elapsed, budget):
        fast = elapsed < budget
        verdict = "PASS" if ok and fast else "FAIL"
        line = (f"criterion {number:>2}: {verdict}  {detail}  "
                f"[{elapsed:.1f} s, budget {budget:g} s{'' if fast else ', over budget'}]")
        _LINES[number] = line
        print(line)
        return ok and fast, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_LINES):
            terminalreporter.write_line(_LINES[number])
