import pytest

_VERDICTS = {}


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    marker = request.node.get_closest_marker("criterion")
    number, title = marker.args
    state = {}

    def record(ok, detail):
        line = f"criterion {number:>2}  {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        state["line"] = line
        _VERDICTS[number] = line
        print(line)
        assert ok, line

    yield record
    if "line" not in state:
        _VERDICTS[number] = f"criterion {number:>2}  FAIL  {title}: raised before a verdict"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[number])
