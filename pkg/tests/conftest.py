import pytest

from covrep.grid import build_grid

ACCEPTANCE_LINES = {}


@pytest.fixture
def unit_grid():
    return build_grid(64, 0.0, 1.0)


@pytest.fixture
def record_criterion():
    """Store a one-line verdict for the acceptance summary."""

    def record(number: int, title: str, passed: bool, detail: str = ""):
        line = f"criterion {number} [{title}]: {'PASS' if passed else 'FAIL'}"
        if detail:
            line += f"  ({detail})"
        ACCEPTANCE_LINES[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
