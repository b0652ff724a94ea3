import pytest

_ACCEPTANCE = []


@pytest.fixture
def record_criterion():
    """Store one pass/fail line per acceptance criterion for the summary."""
    def record(number: int, passed: bool, detail: str) -> bool:
        _ACCEPTANCE.append((number, passed, detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
