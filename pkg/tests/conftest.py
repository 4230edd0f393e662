import logging

import pytest

# One line per acceptance criterion, filled in by tests/test_acceptance.py.
CRITERIA: dict[int, tuple[bool, str]] = {}


def record(number: int, ok: bool, detail: str) -> None:
    CRITERIA[number] = (bool(ok), detail)


@pytest.fixture(autouse=True)
def _quiet_short_gap_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="disbec")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
