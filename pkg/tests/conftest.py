"""Shared fixtures and the acceptance-criteria reporter."""

import pytest

ACCEPTANCE_RESULTS = {}


def record_acceptance(criterion: int, ok: bool, detail: str):
    line = f"ACCEPTANCE {criterion:>2}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_RESULTS[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for criterion in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[criterion])
