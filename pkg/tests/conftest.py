import pytest

_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """``record(n, ok, detail)`` stores one verdict line and fails the test when ``ok`` is false."""

    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[n] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
