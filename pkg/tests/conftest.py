import pytest

_LINES = {}


@pytest.fixture
def criterion(request):
    """Record a one-line PASS/FAIL verdict for an acceptance criterion.

    Call as ``criterion(n, ok, detail)``.  A test that errors before
    reporting is recorded as a failure.
    """
    seen = {}

    def report(n, ok, detail=""):
        seen[n] = True
        line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
        _LINES[n] = line
        print(line)

    yield report
    if not seen:
        n = request.node.get_closest_marker("criterion")
        if n is not None:
            _LINES[n.args[0]] = f"CRITERION {n.args[0]}: FAIL (error before verdict)"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
