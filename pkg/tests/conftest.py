import pytest

_RESULTS = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, passed, detail)``."""

    def record(n, passed, detail):
        line = f"CRITERION {n}: {'PASS' if passed else 'FAIL'} {detail}"
        _RESULTS[n] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS, key=lambda k: (int(str(k).split()[0]), str(k))):
        terminalreporter.write_line(_RESULTS[n])
