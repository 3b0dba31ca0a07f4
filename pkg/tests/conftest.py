import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import acceptance_registry  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_registry.lines()
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
