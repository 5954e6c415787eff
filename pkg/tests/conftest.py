"""Test-session plumbing: collect acceptance verdicts for the summary."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

acceptance_verdicts = []


def pytest_terminal_summary(terminalreporter):
    if not acceptance_verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_verdicts:
        terminalreporter.write_line(line.rstrip("\n"))
