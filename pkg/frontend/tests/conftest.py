"""Acceptance-criterion reporting for standalone runs of this suite."""

import pytest

_criterion_lines = []


@pytest.fixture
def criterion():
    """Record a one-line PASS message for a numbered release criterion."""

    def _report(num: int, message: str) -> None:
        _criterion_lines.append(f"criterion {num:2d}: PASS — {message}")

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criterion_lines):
            terminalreporter.write_line(line)
