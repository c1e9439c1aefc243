"""Shared memoized problem setups used across the test modules."""

import pytest

import socverify as sv

_CACHE: dict = {}


def _case(name: str, T: float = 1.0, N: int = 100):
    """Build (problem, traj, lin, mset, vdata) once per configuration."""
    key = (name, T, N)
    if key not in _CACHE:
        problem, traj = sv.registry(name, T=T, grid_n=N)
        lin = sv.linearize(problem, traj)
        mset = sv.find_multipliers(problem, traj, lin)
        vdata = sv.prepare_vertices(problem, traj, lin, mset)
        _CACHE[key] = (problem, traj, lin, mset, vdata)
    return _CACHE[key]


@pytest.fixture(scope="session")
def case():
    """Factory fixture: case(name, T, N) with session-wide memoization."""
    return _case
