import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bergdyn.geometry import ClosedArc, Complement, Disc, DomainSpec

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def disc():
    return DomainSpec(Disc(0j, 1.0))


@pytest.fixture
def slit():
    """The sphere minus the closed upper half of the unit circle."""
    return DomainSpec(Complement(ClosedArc(0.0, math.pi)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``."""
    def record(n, ok, detail):
        CRITERIA[n] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
