import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

#: (criterion, passed, measured, bound) lines collected by the acceptance suite
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, measured, bound in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name:<48} measured {measured:<32} bound {bound}")
