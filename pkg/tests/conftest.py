import pytest

_verdicts = []


@pytest.fixture(scope="session")
def verdict_log():
    """Shared sink for acceptance verdict lines, echoed after the run."""
    return _verdicts


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in _verdicts:
            terminalreporter.write_line(line)
