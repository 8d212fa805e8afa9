import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ieqdg.field import DGSpace
from ieqdg.mesh import build_rect_mesh

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

VERDICTS = []


def record_verdict(number, ok, detail):
    """Print and remember one acceptance line, then fail the test if needed."""
    line = f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    VERDICTS.append(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS):
            terminalreporter.write_line(line)


def make_space(n=4, degree=2, boundary="periodic", domain=(-np.pi, np.pi), ny=None, **kw):
    mesh = build_rect_mesh([domain] * 2, (n, ny or n), boundary)
    return DGSpace(mesh, degree, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
