import pytest

from poisson_noma.coverage import clear_cache

_CRITERIA = {}


def record_criterion(number, passed, detail):
    _CRITERIA[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture(autouse=True, scope="session")
def _fresh_cache():
    clear_cache()
    yield
