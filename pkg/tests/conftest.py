"""Shared fixtures: acceptance reporting that survives output capture."""

import pytest

_acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance():
    """One PASS/FAIL line per criterion, echoed in the terminal summary."""
    def report(criterion: int, ok: bool, detail: str) -> None:
        line = f"ACCEPTANCE-{criterion}: {'PASS' if ok else 'FAIL'} | {detail}"
        _acceptance_lines.append(line)
        print(line, flush=True)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
