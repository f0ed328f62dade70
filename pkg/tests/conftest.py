import pytest

_VERDICTS = []


@pytest.fixture(scope="session")
def default_calibration():
    """Calibration on the default anchors; about 40 s, so computed once."""
    from oriwheel.terra import calibrate

    return calibrate()


@pytest.fixture
def verdict():
    """Record one acceptance line, print it, and fail the test if the check failed."""

    def record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        print(line)
        _VERDICTS.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
