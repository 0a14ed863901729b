import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record():
    """Store and print one PASS/FAIL line for an acceptance criterion."""

    def _record(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
