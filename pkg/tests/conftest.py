import pytest

_ACCEPTANCE = {}


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""

    def record(number: int, passed: bool, detail: str):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
