import numpy as np
import pytest

from rklearn.butcher import available_methods, builtin

EXPLICIT = [m for m in available_methods() if builtin(m).is_explicit]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=available_methods())
def registry_tableau(request):
    return builtin(request.param)


@pytest.fixture(params=EXPLICIT)
def explicit_tableau(request):
    return builtin(request.param)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
