import pytest

# Filled by test_acceptance.py: (criterion number, title, passed, detail).
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    def record(number, title, passed, detail):
        ACCEPTANCE_LINES.append((number, title, passed, detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_LINES):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{verdict}  [{number:2d}] {title}: {detail}")
