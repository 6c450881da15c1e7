import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(label, ok, detail)."""

    def record(label: str, ok: bool, detail: str):
        _LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
