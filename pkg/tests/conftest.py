"""Shared fixtures.

Every ground state computed through the ``solve`` fixture (or collected from a
sweep) is kept in a session registry, so the identity and variational checks
marked ``last`` can run over all solutions of the session.  Acceptance tests
report one PASS/FAIL line each through ``criterion``; the lines are printed in
the terminal summary.
"""

from __future__ import annotations

import numpy as np
import pytest

from kirchhoff_gs import NonlinearitySpec, RadialGrid, SolverOptions, solve_ground_state
from kirchhoff_gs.limit_profiles import solve_limit_profile

_LINES: list[str] = []
_SOLUTIONS: list = []


def pytest_collection_modifyitems(session, config, items):
    items.sort(key=lambda item: item.get_closest_marker("last") is not None)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def criterion():
    """``criterion(label, passed, detail)`` records and prints a result line."""
    def report(label: str, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        _LINES.append(line)
        print(line)
    return report


@pytest.fixture(scope="session")
def solutions():
    """Every ground state produced in the session, as (tag, GroundState)."""
    return _SOLUTIONS


@pytest.fixture(scope="session")
def solve():
    """Cached solve_ground_state(RadialGrid(N, 10, M), spec, c) recorded in the registry."""
    cache = {}

    def run(spec: NonlinearitySpec, N: int, c: float, M: int = 4096,
            opts: SolverOptions | None = None, tag: str = ""):
        key = (spec, N, c, M, opts)
        if key not in cache:
            gs = solve_ground_state(RadialGrid(N, 10.0, M), spec, c, opts)
            cache[key] = gs
            _SOLUTIONS.append((tag or f"N={N} c={c:g} M={M}", gs))
        return cache[key]
    return run


@pytest.fixture(scope="session")
def register():
    """Add externally produced ground states (e.g. from sweeps) to the registry."""
    def add(tag: str, states) -> None:
        for gs in states:
            _SOLUTIONS.append((f"{tag} c={gs.c:g}", gs))
    return add


@pytest.fixture(scope="session")
def base_spec():
    return NonlinearitySpec.power(1.0, 1.0, 5.0)


@pytest.fixture(scope="session")
def two_power_spec():
    return NonlinearitySpec.two_power(1.0, 1.0, 1.0, 5.0, 1.0, 5.5)


@pytest.fixture(scope="session")
def base_profile():
    """Shooting profile of -Δw + w = w⁴ in R³."""
    return solve_limit_profile(3, 1.0, 1.0, 5.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)
