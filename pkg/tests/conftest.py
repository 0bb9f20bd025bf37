import pytest

from circsense.kernels import backends

N_CRITERIA = 11
_lines = {}


@pytest.fixture(params=sorted(backends()))
def kernels(request):
    """Every importable kernel backend module, by name."""
    return backends()[request.param]


@pytest.fixture
def acceptance():
    """``record(n, ok, detail)`` stores the verdict line for acceptance criterion ``n``."""

    def record(n, ok, detail):
        _lines[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        terminalreporter.write_line(_lines.get(n, f"criterion {n:>2}: NOT RUN"))
