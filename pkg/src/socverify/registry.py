"""Built-in regression problems with known behavior.

Each entry pairs a ProblemDef builder with the zero reference candidate.  The
set covers: a fully worked singular example with a horizon-dependent verdict
("pe"), an analytically solvable positive case ("lq-decoupled"), negative
controls that violate exactly one pointwise condition each ("goh-violator",
"lc-violator"), and a cubic-remainder problem for the expansion probe
("cubic").
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .polynomials import poly_from_monomials
from .problem import EndpointMap, ProblemDef, VectorField
from .trajectory import Grid, Trajectory, integrate_state


def _field(n: int, l: int, comps: list[list[tuple[float, tuple[int, ...]]]]) -> VectorField:
    return VectorField(n, l, [poly_from_monomials(n + l, c) for c in comps])


def _endpoint(n: int, terms: list[tuple[float, tuple[int, ...]]]) -> EndpointMap:
    return EndpointMap(n, poly_from_monomials(2 * n, terms))


def _pin_initial_state(n: int) -> tuple[EndpointMap, ...]:
    out = []
    for i in range(n):
        e = [0] * (2 * n)
        e[i] = 1
        out.append(_endpoint(n, [(1.0, tuple(e))]))
    return tuple(out)


def _pe(T: float) -> ProblemDef:
    # x1' = x2 + u, x2' = v, x3' = x1^2 + x2^2 + x2 v + u^2;
    # cost -2 x1(T) x2(T) + x3(T), x(0) = 0.  Singular where the verdict
    # flips with the horizon: short horizons pass the positivity test, long
    # ones produce cone directions with negative reduced form.
    f0 = _field(3, 1, [
        [(1.0, (0, 1, 0, 0)), (1.0, (0, 0, 0, 1))],
        [],
        [(1.0, (2, 0, 0, 0)), (1.0, (0, 2, 0, 0)), (1.0, (0, 0, 0, 2))],
    ])
    f1 = _field(3, 1, [[], [(1.0, (0, 0, 0, 0))], [(1.0, (0, 1, 0, 0))]])
    cost = _endpoint(3, [(-2.0, (0, 0, 0, 1, 1, 0)), (1.0, (0, 0, 0, 0, 0, 1))])
    return ProblemDef("pe", 3, 1, 1, T, (f0, f1), cost, (), _pin_initial_state(3),
                      notes="singular reference with horizon-dependent verdict")


def _lq_decoupled(T: float) -> ProblemDef:
    # x1' = u, x2' = v, x3' = u^2 + x2^2; cost x3(T), x(0) = 0.  The reduced
    # form on the cone is int(u^2 + y^2) + h^2/2 at unit cost weight, so the
    # positivity bound is exactly 1/2 there (1/4 for the normalized vertex).
    f0 = _field(3, 1, [
        [(1.0, (0, 0, 0, 1))],
        [],
        [(1.0, (0, 0, 0, 2)), (1.0, (0, 2, 0, 0))],
    ])
    f1 = _field(3, 1, [[], [(1.0, (0, 0, 0, 0))], [(1.0, (0, 1, 0, 0))]])
    cost = _endpoint(3, [(1.0, (0, 0, 0, 0, 0, 1))])
    return ProblemDef("lq-decoupled", 3, 1, 1, T, (f0, f1), cost, (),
                      _pin_initial_state(3),
                      notes="analytic positivity bound 1/2 at unit cost weight")


def _goh_violator(T: float) -> ProblemDef:
    # x1' = v2, x2' = v1, x3' = u^2 + x1 v1; cost x3(T), x(0) = 0.  The two
    # affine fields do not commute against the costate, so the bracket matrix
    # G has a constant off-diagonal entry and the bracket condition fails.
    f0 = _field(3, 1, [[], [], [(1.0, (0, 0, 0, 2))]])
    f1 = _field(3, 1, [[], [(1.0, (0, 0, 0, 0))], [(1.0, (1, 0, 0, 0))]])
    f2 = _field(3, 1, [[(1.0, (0, 0, 0, 0))], [], []])
    cost = _endpoint(3, [(1.0, (0, 0, 0, 0, 0, 1))])
    return ProblemDef("goh-violator", 3, 1, 2, T, (f0, f1, f2), cost, (),
                      _pin_initial_state(3),
                      notes="bracket condition fails: G12 = 1/2 at unit cost weight")


def _lc_violator(T: float) -> ProblemDef:
    # x' = -u^2; cost x(T), x(0) = 0.  The control Hessian is negative along
    # the only multiplier, so the pointwise convexity condition fails.
    f0 = _field(1, 1, [[(-1.0, (0, 2))]])
    cost = _endpoint(1, [(1.0, (0, 1))])
    return ProblemDef("lc-violator", 1, 1, 0, T, (f0,), cost, (),
                      _pin_initial_state(1),
                      notes="control Hessian negative along the multiplier")


def _cubic(T: float) -> ProblemDef:
    # x1' = x2 + u, x2' = v, x3' = x1^2 + x2^2 + u^2 + x1^3; cost x3(T),
    # x(0) = 0.  Positive on every horizon; the cubic state term makes the
    # expansion remainder exactly third order along u-perturbations.
    f0 = _field(3, 1, [
        [(1.0, (0, 1, 0, 0)), (1.0, (0, 0, 0, 1))],
        [],
        [(1.0, (2, 0, 0, 0)), (1.0, (0, 2, 0, 0)), (1.0, (0, 0, 0, 2)),
         (1.0, (3, 0, 0, 0))],
    ])
    f1 = _field(3, 1, [[], [(1.0, (0, 0, 0, 0))], [(1.0, (0, 1, 0, 0))]])
    cost = _endpoint(3, [(1.0, (0, 0, 0, 0, 0, 1))])
    return ProblemDef("cubic", 3, 1, 1, T, (f0, f1), cost, (),
                      _pin_initial_state(3),
                      notes="third-order expansion remainder along u-perturbations")


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    summary: str
    build: Callable[[float], ProblemDef]
    default_T: float = 1.0


_ENTRIES = {
    "pe": RegistryEntry(
        "pe", "singular benchmark whose verdict flips with the horizon", _pe),
    "lq-decoupled": RegistryEntry(
        "lq-decoupled", "positive case with analytic positivity bound", _lq_decoupled),
    "goh-violator": RegistryEntry(
        "goh-violator", "negative control: bracket condition fails", _goh_violator),
    "lc-violator": RegistryEntry(
        "lc-violator", "negative control: control Hessian indefinite", _lc_violator),
    "cubic": RegistryEntry(
        "cubic", "cubic dynamics for the expansion-order probe", _cubic),
}


def available() -> tuple[str, ...]:
    return tuple(sorted(_ENTRIES))


def get_problem(name: str, T: float | None = None) -> ProblemDef:
    try:
        entry = _ENTRIES[name]
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; available: {', '.join(available())}") from None
    return entry.build(entry.default_T if T is None else float(T))


def reference_trajectory(problem: ProblemDef, grid: Grid) -> Trajectory:
    """The zero candidate every built-in problem is verified around."""
    return integrate_state(problem, grid, np.zeros(problem.n),
                           np.zeros((grid.N + 1, problem.l)),
                           np.zeros((grid.N + 1, problem.m)))


def registry(name: str, T: float | None = None, grid_n: int = 1000):
    """Problem plus its reference candidate on a uniform grid."""
    problem = get_problem(name, T)
    return problem, reference_trajectory(problem, Grid(problem.T, grid_n))
