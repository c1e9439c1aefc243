"""Trajectories on a fixed uniform grid: integration, linearization, transforms.

All integrals use the composite trapezoid rule on the grid nodes, states are
propagated with classical RK4 (controls and sampled coefficient matrices are
interpolated linearly inside a step), and time derivatives of sampled series
use 4th-order finite differences with one-sided stencils at the ends.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .problem import ProblemDef


class IntegrationDivergedError(RuntimeError):
    """State integration left the finite range; carries the first bad node."""

    def __init__(self, node: int):
        super().__init__(f"state integration diverged at node {node}")
        self.node = node


@dataclass(frozen=True)
class Grid:
    """Uniform time grid with N steps (N+1 nodes) on [0, T]."""

    T: float
    N: int

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.N < 2:
            raise ValueError("N must be >= 2")

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights over the nodes."""
        w = np.full(self.N + 1, self.h)
        w[0] = w[-1] = self.h / 2
        return w


def trapezoid(samples: np.ndarray, grid: Grid) -> float | np.ndarray:
    """Composite trapezoid integral of node samples (axis 0)."""
    w = grid.weights
    return np.tensordot(w, np.asarray(samples), axes=(0, 0))


def cumulative_trapezoid(samples: np.ndarray, grid: Grid) -> np.ndarray:
    """Running trapezoid integral, same shape as input, zero at the first node."""
    samples = np.asarray(samples, dtype=float)
    out = np.zeros_like(samples)
    inc = 0.5 * grid.h * (samples[:-1] + samples[1:])
    out[1:] = np.cumsum(inc, axis=0)
    return out


def deriv4(samples: np.ndarray, h: float) -> np.ndarray:
    """Time derivative of node samples along axis 0.

    4th-order central differences in the interior with matching one-sided
    stencils at the boundary; falls back to 2nd order when fewer than five
    nodes are available.
    """
    f = np.asarray(samples, dtype=float)
    K = f.shape[0]
    out = np.empty_like(f)
    if K < 2:
        raise ValueError("need at least two nodes")
    if K < 5:
        out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
        if K == 2:
            out[0] = out[-1] = (f[1] - f[0]) / h
        else:
            out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
            out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
        return out
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    return out


@dataclass(eq=False)
class Trajectory:
    """Candidate process sampled on the grid nodes."""

    grid: Grid
    x: np.ndarray  # (N+1, n)
    u: np.ndarray  # (N+1, l)
    v: np.ndarray  # (N+1, m)

    def __post_init__(self):
        K = self.grid.N + 1
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim == 1:
            self.x = self.x[:, None]
        self.u = np.asarray(self.u, dtype=float).reshape(K, -1)
        self.v = np.asarray(self.v, dtype=float).reshape(K, -1)
        if self.x.shape[0] != K:
            raise ValueError(f"x has {self.x.shape[0]} rows, expected {K}")

    @property
    def n(self) -> int:
        return self.x.shape[1]


def _controls_on_grid(grid: Grid, u, v, l: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    K = grid.N + 1
    u = np.zeros((K, l)) if u is None else np.asarray(u, dtype=float).reshape(K, l)
    v = np.zeros((K, m)) if v is None else np.asarray(v, dtype=float).reshape(K, m)
    return u, v


def integrate_state(problem: ProblemDef, grid: Grid, x0: Sequence[float],
                    u: np.ndarray | None = None, v: np.ndarray | None = None) -> Trajectory:
    """Integrate the state equation with RK4 from node controls.

    Controls are interpolated linearly inside each step (midpoint stages use
    the average of the adjacent node values).
    """
    u, v = _controls_on_grid(grid, u, v, problem.l, problem.m)
    K = grid.N + 1
    h = grid.h
    x = np.empty((K, problem.n))
    x[0] = np.asarray(x0, dtype=float)
    f = problem.dynamics
    for k in range(grid.N):
        xk = x[k]
        u0, u1 = u[k], u[k + 1]
        v0, v1 = v[k], v[k + 1]
        um, vm = 0.5 * (u0 + u1), 0.5 * (v0 + v1)
        k1 = f(xk, u0, v0)
        k2 = f(xk + 0.5 * h * k1, um, vm)
        k3 = f(xk + 0.5 * h * k2, um, vm)
        k4 = f(xk + h * k3, u1, v1)
        xn = xk + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(xn)):
            raise IntegrationDivergedError(k + 1)
        x[k + 1] = xn
    return Trajectory(grid, x, u, v)


@dataclass(eq=False)
class FeasibilityReport:
    """Dynamics defect and endpoint residuals of a candidate trajectory."""

    defect: float
    equality_residuals: np.ndarray
    inequality_values: np.ndarray
    active_inequalities: tuple[int, ...]
    cost_value: float
    tol: float

    @property
    def feasible(self) -> bool:
        ok_eq = self.equality_residuals.size == 0 or np.max(np.abs(self.equality_residuals)) <= self.tol
        ok_in = self.inequality_values.size == 0 or np.max(self.inequality_values) <= self.tol
        return self.defect <= self.tol and ok_eq and ok_in

    def to_doc(self) -> dict:
        return {
            "defect": self.defect,
            "equality_residuals": [float(r) for r in self.equality_residuals],
            "inequality_values": [float(r) for r in self.inequality_values],
            "active_inequalities": list(self.active_inequalities),
            "cost_value": self.cost_value,
            "feasible": self.feasible,
            "tol": self.tol,
        }


def feasibility_report(problem: ProblemDef, traj: Trajectory, tol: float = 1e-6) -> FeasibilityReport:
    """Check a candidate against the discretized dynamics and endpoint maps.

    The defect is the max over steps of the one-step RK4 prediction error,
    so a trajectory produced by integrate_state has defect exactly zero.
    """
    grid = traj.grid
    h = grid.h
    x, u, v = traj.x, traj.u, traj.v
    um, vm = 0.5 * (u[:-1] + u[1:]), 0.5 * (v[:-1] + v[1:])
    k1 = problem.dynamics_many(x[:-1], u[:-1], v[:-1])
    k2 = problem.dynamics_many(x[:-1] + 0.5 * h * k1, um, vm)
    k3 = problem.dynamics_many(x[:-1] + 0.5 * h * k2, um, vm)
    k4 = problem.dynamics_many(x[:-1] + h * k3, u[1:], v[1:])
    pred = x[:-1] + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    defect = float(np.max(np.abs(pred - x[1:]))) if grid.N > 0 else 0.0
    x0, xT = x[0], x[-1]
    eta = np.array([em.value(x0, xT) for em in problem.equalities])
    phi = np.array([em.value(x0, xT) for em in problem.inequalities])
    active = tuple(int(i) for i in range(phi.size) if abs(phi[i]) <= tol)
    return FeasibilityReport(defect, eta, phi, active, problem.cost.value(x0, xT), tol)


@dataclass(eq=False)
class LinearizedSystem:
    """Dynamics linearized along a trajectory, sampled at the grid nodes.

    B is the coefficient the transformed linearized equation attaches to the
    primitive of the affine control: B = Fx Fv - d/dt Fv.
    """

    grid: Grid
    Fx: np.ndarray  # (K, n, n)
    Fu: np.ndarray  # (K, n, l)
    Fv: np.ndarray  # (K, n, m)
    udot: np.ndarray  # (K, l)
    B: np.ndarray  # (K, n, m)

    @property
    def n(self) -> int:
        return self.Fx.shape[1]


def linearize(problem: ProblemDef, traj: Trajectory) -> LinearizedSystem:
    """Sample Fx, Fu, Fv along the trajectory and form B = Fx Fv - d/dt Fv."""
    grid = traj.grid
    xu = np.concatenate([traj.x, traj.u], axis=1)
    Fx = problem.fields[0].jac_x_many(xu)
    Fu = problem.fields[0].jac_u_many(xu)
    K = grid.N + 1
    Fv = np.zeros((K, problem.n, problem.m))
    for i in range(problem.m):
        f = problem.fields[i + 1]
        Fx += traj.v[:, i, None, None] * f.jac_x_many(xu)
        Fu += traj.v[:, i, None, None] * f.jac_u_many(xu)
        Fv[:, :, i] = f.value_many(xu)
    udot = deriv4(traj.u, grid.h) if problem.l > 0 else np.zeros((K, 0))
    B = np.einsum("kab,kbm->kam", Fx, Fv) - deriv4(Fv, grid.h) if problem.m > 0 \
        else np.zeros((K, problem.n, 0))
    return LinearizedSystem(grid, Fx, Fu, Fv, udot, B)


def _rk4_affine(A: np.ndarray, inputs: list[tuple[np.ndarray, np.ndarray]],
                z0: np.ndarray, h: float, backward: bool = False) -> np.ndarray:
    """Propagate z' = A(t) z + sum_j C_j(t) s_j(t) through the grid with RK4.

    A is (K, n, n); each input is a pair (C (K, n, d), s (K, d)).  Sampled
    matrices and series are interpolated linearly inside each step.  With
    backward=True the terminal value z0 is propagated from node K-1 to 0.
    """
    K = A.shape[0]
    out = np.empty((K,) + np.shape(z0))
    order = range(K - 1, 0, -1) if backward else range(K - 1)
    start, step = (K - 1, -1) if backward else (0, 1)
    out[start] = z0
    hh = -h if backward else h

    def rhs(Ak, k_from, k_to, frac, z):
        val = Ak @ z
        for C, s in inputs:
            Ck = (1 - frac) * C[k_from] + frac * C[k_to]
            sk = (1 - frac) * s[k_from] + frac * s[k_to]
            val = val + Ck @ sk
        return val

    z = out[start].copy()
    for k in order:
        k_to = k + step
        Am = 0.5 * (A[k] + A[k_to])
        k1 = rhs(A[k], k, k_to, 0.0, z)
        k2 = rhs(Am, k, k_to, 0.5, z + 0.5 * hh * k1)
        k3 = rhs(Am, k, k_to, 0.5, z + 0.5 * hh * k2)
        k4 = rhs(A[k_to], k, k_to, 1.0, z + hh * k3)
        z = z + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k_to] = z
    return out


@dataclass(eq=False)
class Direction:
    """Linearized variation: initial state shift plus control variations."""

    grid: Grid
    x0: np.ndarray  # (n,)
    u: np.ndarray  # (K, l)
    v: np.ndarray  # (K, m)
    x: np.ndarray  # (K, n), propagated through the linearized dynamics


def integrate_linearized(lin: LinearizedSystem, x0: Sequence[float],
                         u: np.ndarray | None = None, v: np.ndarray | None = None) -> Direction:
    """Propagate the linearized state equation for one variation."""
    l, m = lin.Fu.shape[2], lin.Fv.shape[2]
    u, v = _controls_on_grid(lin.grid, u, v, l, m)
    x0 = np.asarray(x0, dtype=float)
    x = _rk4_affine(lin.Fx, [(lin.Fu, u), (lin.Fv, v)], x0, lin.grid.h)
    return Direction(lin.grid, x0, u, v, x)


@dataclass(eq=False)
class GohDirection:
    """Transformed variation (xi, u, y) with free terminal primitive value h.

    Built either by transforming a Direction (then h = y(T) and v is kept)
    or directly from (xi0, u, y, h) via the transformed state equation.
    """

    grid: Grid
    xi0: np.ndarray  # (n,)
    u: np.ndarray  # (K, l)
    y: np.ndarray  # (K, m)
    h: np.ndarray  # (m,)
    xi: np.ndarray  # (K, n)
    v: np.ndarray | None = None
    transform_residual: float | None = None


def goh_transform_direction(lin: LinearizedSystem, direction: Direction) -> GohDirection:
    """Transform a variation: y = primitive of v, xi = x - Fv y, h = y(T).

    The reported residual measures how well xi satisfies the discretized
    transformed state equation (it decays like N^-2 for smooth variations,
    dominated by the trapezoid primitive).
    """
    grid = lin.grid
    y = cumulative_trapezoid(direction.v, grid)
    xi = direction.x - np.einsum("knm,km->kn", lin.Fv, y)
    rhs = (np.einsum("kab,kb->ka", lin.Fx, xi)
           + np.einsum("kal,kl->ka", lin.Fu, direction.u)
           + np.einsum("kam,km->ka", lin.B, y))
    resid = float(np.max(np.abs(deriv4(xi, grid.h) - rhs)))
    return GohDirection(grid, direction.x0.copy(), direction.u, y, y[-1].copy(), xi,
                        v=direction.v, transform_residual=resid)


def goh_propagate(lin: LinearizedSystem, xi0: Sequence[float], u: np.ndarray | None,
                  y: np.ndarray | None, h: np.ndarray | Sequence[float] | None = None) -> GohDirection:
    """Build a GohDirection from raw inputs by integrating the transformed equation."""
    l, m = lin.Fu.shape[2], lin.Fv.shape[2]
    u, y = _controls_on_grid(lin.grid, u, y, l, m)
    xi0 = np.asarray(xi0, dtype=float)
    xi = _rk4_affine(lin.Fx, [(lin.Fu, u), (lin.B, y)], xi0, lin.grid.h)
    h = y[-1].copy() if h is None else np.asarray(h, dtype=float).reshape(m)
    return GohDirection(lin.grid, xi0, u, y, h, xi)


def gamma_order(gdir: GohDirection) -> float:
    """Quadratic growth order: |xi0|^2 + |h|^2 + integral(|u|^2 + |y|^2)."""
    grid = gdir.grid
    sq = np.sum(gdir.u**2, axis=1) + np.sum(gdir.y**2, axis=1)
    return float(np.dot(gdir.xi0, gdir.xi0) + np.dot(gdir.h, gdir.h) + trapezoid(sq, grid))


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    """Write node samples as CSV with header t,x1..xn,u1..ul,v1..vm."""
    n, l, m = traj.x.shape[1], traj.u.shape[1], traj.v.shape[1]
    header = (["t"] + [f"x{i+1}" for i in range(n)]
              + [f"u{i+1}" for i in range(l)] + [f"v{i+1}" for i in range(m)])
    t = traj.grid.nodes
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(traj.grid.N + 1):
            row = [t[k], *traj.x[k], *traj.u[k], *traj.v[k]]
            writer.writerow([f"{val:.17g}" for val in row])


def read_trajectory_csv(path: str | Path, problem: ProblemDef) -> Trajectory:
    """Read a trajectory CSV (header t,x1..,u1..,v1..) against a problem's dims."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty trajectory file") from None
        expected = (["t"] + [f"x{i+1}" for i in range(problem.n)]
                    + [f"u{i+1}" for i in range(problem.l)]
                    + [f"v{i+1}" for i in range(problem.m)])
        if [h.strip() for h in header] != expected:
            raise ValueError(f"{path}: header {header} does not match expected {expected}")
        rows = [[float(cell) for cell in row] for row in reader if row]
    data = np.array(rows)
    if data.shape[0] < 3:
        raise ValueError(f"{path}: need at least 3 nodes")
    t = data[:, 0]
    steps = np.diff(t)
    if t[0] != 0.0 or np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-9 * max(t[-1], 1.0):
        raise ValueError(f"{path}: time column must be a uniform grid starting at 0")
    grid = Grid(float(t[-1]), data.shape[0] - 1)
    n, l = problem.n, problem.l
    return Trajectory(grid, data[:, 1:1 + n], data[:, 1 + n:1 + n + l], data[:, 1 + n + l:])
