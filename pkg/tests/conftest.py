import pytest

from flametemp.thermo import apply_n2_patch, load_thermo


@pytest.fixture(scope="session")
def raw_db():
    return load_thermo()


@pytest.fixture(scope="session")
def db(raw_db):
    return apply_n2_patch(raw_db)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import CRITERIA_LOG
    except ImportError:
        return
    if not CRITERIA_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA_LOG):
        ok, detail = CRITERIA_LOG[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
