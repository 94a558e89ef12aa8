from __future__ import annotations

import pytest

_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(name: str, ok: bool, detail: str) -> None:
        _LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
