import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# (criterion, line) pairs recorded by tests/test_acceptance.py, echoed after the run
_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    def record(k, passed, title, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {k:2d}  {title}: {detail}"
        _ACCEPTANCE_LINES.append((k, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
