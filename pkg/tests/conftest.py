import pytest

VERDICTS = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion.

    Lines are printed immediately (visible with ``-s``) and repeated in the
    terminal summary so they always appear in the session log.
    """
    def report(criterion, ok, detail):
        line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} | {detail}"
        print(line)
        VERDICTS.append(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
