import pytest

from charspan import synthesize_corpus

# one line per acceptance criterion, printed after the test summary so the
# pass/fail verdicts survive pytest's output capture
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synthetic_corpus():
    # 220 trees keeps the round-trip suite above the 200-tree mark
    return synthesize_corpus(220, seed=42)


@pytest.fixture(scope="session")
def small_corpus():
    return synthesize_corpus(25, seed=17, median_chars=8.0, max_chars=20)
