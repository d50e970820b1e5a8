import os
import sys
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from saa.field_dsl import builtin_system  # noqa: E402
from saa.flow import integrate, seed_on_locus  # noqa: E402
from saa.jacobi import frames  # noqa: E402

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.register_profile("ci", max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SU2_PARAMS = {"alpha": 1.0, "beta": 0.0, "gamma": 1.5}
HEIS_PARAMS = {"alpha": 0.6, "beta": 0.8, "gamma": 1.3}
MARTINET_PARAMS = {"alpha": 0.5, "beta": 0.3, "gamma": 0.2}
MARTINET_THETA = 2.5

# name -> (preset, params, p_guess, test horizon, steps)
PRESET_RUNS = {
    "su2": ("su2_left_invariant", SU2_PARAMS, (0.0, 1.0, 1.0), 5.0, 20000),
    "heisenberg": ("heisenberg_drift", HEIS_PARAMS, (-0.6, -0.8, 1.0), 2.0, 4000),
    "martinet": ("martinet_drift", MARTINET_PARAMS, (np.cos(MARTINET_THETA), np.sin(MARTINET_THETA), -1.0), 1.0, 4000),
}


class Extremal:
    """A preset system with its integrated extremal and frames, built lazily."""

    def __init__(self, name):
        preset, params, p_guess, T, steps = PRESET_RUNS[name]
        self.name = name
        t0 = time.perf_counter()
        self.sys = builtin_system(preset, params)
        self.lam0 = seed_on_locus(self.sys, np.zeros(3), p_guess)
        self.ext = integrate(self.sys, self.lam0, T, steps)
        self.build_seconds = time.perf_counter() - t0
        self._fs = None

    @property
    def fs(self):
        if self._fs is None:
            self._fs = frames(self.ext, self.sys, cross_check=True)
        return self._fs


_CACHE = {}


def extremal(name):
    if name not in _CACHE:
        _CACHE[name] = Extremal(name)
    return _CACHE[name]


@pytest.fixture(scope="session")
def su2():
    return extremal("su2")


@pytest.fixture(scope="session")
def heisenberg():
    return extremal("heisenberg")


@pytest.fixture(scope="session")
def martinet():
    return extremal("martinet")


@pytest.fixture(scope="session", params=list(PRESET_RUNS))
def preset_run(request):
    return extremal(request.param)


# --------------------------------------------------------- acceptance report

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the end-of-session summary."""

    def record(criterion, passed, detail):
        _ACCEPTANCE[criterion] = (bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (len(k), k)):
        ok, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
