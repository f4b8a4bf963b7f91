import numpy as np
import pytest

from mtswitch import _backend, _pure

try:
    from mtswitch import _kernels
except ImportError:
    _kernels = None

BACKENDS = ["pure"] + (["compiled"] if _kernels is not None else [])

ACCEPTANCE_LINES = []


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available trial-loop implementation."""
    impl = _pure if request.param == "pure" else _kernels
    monkeypatch.setattr(_backend, "experts_trace", impl.experts_trace)
    monkeypatch.setattr(_backend, "mw_trace", impl.mw_trace)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    def record(number, title, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
