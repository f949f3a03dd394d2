from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # expose each phase's outcome on the item so teardown fixtures can
    # report pass/fail lines (used by the acceptance suite)
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)
