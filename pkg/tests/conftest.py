import numpy as np
import pytest

ACCEPTANCE: dict = {}


def record(criterion: str, ok: bool, detail: str = "") -> bool:
    """Store one acceptance outcome for the end-of-session summary."""
    ACCEPTANCE[criterion] = (bool(ok), detail)
    return bool(ok)


@pytest.fixture
def acceptance():
    """The ``record`` callback for acceptance tests."""
    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:5s} {'PASS' if ok else 'FAIL'}  {detail}")
