import pytest

_LINES = []


@pytest.fixture
def verdict():
    """Record one acceptance line; echoed live and again in the terminal summary."""

    def record(criterion, ok, detail):
        tag = criterion if isinstance(criterion, str) else f"criterion {criterion}"
        line = f"[{tag}] {'PASS' if ok else 'FAIL'}: {detail}"
        _LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
