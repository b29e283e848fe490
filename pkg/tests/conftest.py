import pytest

_criterion_lines = []


@pytest.fixture(scope="session")
def record_criterion():
    """Collect one pass/fail summary line per acceptance criterion; the
    lines are echoed in the terminal summary so they survive capture."""

    def record(line):
        _criterion_lines.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
