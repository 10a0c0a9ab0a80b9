"""Shared fixtures and the acceptance-criteria terminal report."""

import pytest

from treeperc import ModelParams

_ACCEPTANCE_LINES = []


def record_criterion(name, ok, detail):
    """Collect one pass/fail line for the end-of-run acceptance report."""
    line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params_sub():
    # reference subcritical point used throughout: kappa = 0.84
    return ModelParams(2, "0.3")


@pytest.fixture(scope="session")
def params_crit():
    return ModelParams(2, "1/2")


@pytest.fixture(scope="session")
def params_r3():
    return ModelParams(3, "0.2")
