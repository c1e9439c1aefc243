"""Finite-dimensional model of the transformed critical cone.

A direction is packed into one vector z = (xi0, u nodes, y nodes, h).  The
linear map from z to the transformed state at every node is materialized once
(one matrix RK4 sweep over a hat-function basis), so endpoint constraint rows,
the quadratic form, and batched evaluations all share the same discretization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .goh import GohMatrices, HBlocks
from .problem import ProblemDef
from .trajectory import GohDirection, Grid, LinearizedSystem, Trajectory, trapezoid


@dataclass(frozen=True)
class ConeLayout:
    """Index layout of the packed direction vector."""

    n: int
    l: int
    m: int
    K: int  # number of grid nodes

    @property
    def dim(self) -> int:
        return self.n + self.K * (self.l + self.m) + self.m

    @property
    def sl_xi0(self) -> slice:
        return slice(0, self.n)

    @property
    def sl_u(self) -> slice:
        return slice(self.n, self.n + self.K * self.l)

    @property
    def sl_y(self) -> slice:
        start = self.n + self.K * self.l
        return slice(start, start + self.K * self.m)

    @property
    def sl_h(self) -> slice:
        return slice(self.dim - self.m, self.dim)

    def u_cols(self, k: int) -> slice:
        start = self.n + k * self.l
        return slice(start, start + self.l)

    def y_cols(self, k: int) -> slice:
        start = self.n + self.K * self.l + k * self.m
        return slice(start, start + self.m)

    def pack(self, xi0, u, y, h) -> np.ndarray:
        z = np.empty(self.dim)
        z[self.sl_xi0] = np.reshape(xi0, self.n)
        z[self.sl_u] = np.reshape(u, self.K * self.l)
        z[self.sl_y] = np.reshape(y, self.K * self.m)
        z[self.sl_h] = np.reshape(h, self.m)
        return z

    def unpack(self, z: np.ndarray):
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            xi0 = z[self.sl_xi0]
            u = z[self.sl_u].reshape(self.K, self.l)
            y = z[self.sl_y].reshape(self.K, self.m)
            h = z[self.sl_h]
            return xi0, u, y, h
        q = z.shape[1]
        xi0 = z[self.sl_xi0]
        u = z[self.sl_u].reshape(self.K, self.l, q)
        y = z[self.sl_y].reshape(self.K, self.m, q)
        h = z[self.sl_h]
        return xi0, u, y, h

    def gamma_diag(self, grid: Grid) -> np.ndarray:
        """Diagonal Gram of the growth order |xi0|^2 + |h|^2 + int(|u|^2 + |y|^2)."""
        g = np.ones(self.dim)
        w = grid.weights
        if self.l:
            g[self.sl_u] = np.repeat(w, self.l)
        if self.m:
            g[self.sl_y] = np.repeat(w, self.m)
        return g


def _propagation_matrix(lin: LinearizedSystem, layout: ConeLayout) -> np.ndarray:
    """Transformed-state response to every packed basis coordinate.

    Returns L with L[k] @ z equal to xi(t_k) for the direction packed in z.
    Matches the one-direction integrator: coefficients and node inputs are
    interpolated linearly inside each RK4 step.
    """
    K, n, dim = layout.K, layout.n, layout.dim
    l, m = layout.l, layout.m
    h = lin.grid.h
    L = np.zeros((K, n, dim))
    Z = np.zeros((n, dim))
    Z[:, layout.sl_xi0] = np.eye(n)
    L[0] = Z

    def stage(A, Fu, B, w0, w1, u0, u1, y0, y1, Zs):
        out = A @ Zs
        if l:
            out[:, u0] += w0 * Fu
            out[:, u1] += w1 * Fu
        if m:
            out[:, y0] += w0 * B
            out[:, y1] += w1 * B
        return out

    for k in range(K - 1):
        A0, A1 = lin.Fx[k], lin.Fx[k + 1]
        Am = 0.5 * (A0 + A1)
        Fu0, Fu1 = lin.Fu[k], lin.Fu[k + 1]
        Fum = 0.5 * (Fu0 + Fu1)
        B0, B1 = lin.B[k], lin.B[k + 1]
        Bm = 0.5 * (B0 + B1)
        u0, u1 = layout.u_cols(k), layout.u_cols(k + 1)
        y0, y1 = layout.y_cols(k), layout.y_cols(k + 1)
        k1 = stage(A0, Fu0, B0, 1.0, 0.0, u0, u1, y0, y1, Z)
        k2 = stage(Am, Fum, Bm, 0.5, 0.5, u0, u1, y0, y1, Z + 0.5 * h * k1)
        k3 = stage(Am, Fum, Bm, 0.5, 0.5, u0, u1, y0, y1, Z + 0.5 * h * k2)
        k4 = stage(A1, Fu1, B1, 0.0, 1.0, u0, u1, y0, y1, Z + h * k3)
        Z = Z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        L[k + 1] = Z
    return L


@dataclass(eq=False)
class DiscretizedCone:
    """Constraint rows and propagation operator for packed directions.

    A_eq z = 0 linearizes the endpoint equalities; A_in z <= 0 collects the
    cost row and the active inequality rows.  in_labels names A_in's rows.
    """

    layout: ConeLayout
    grid: Grid
    L: np.ndarray  # (K, n, dim)
    A_eq: np.ndarray  # (d_eta, dim)
    A_in: np.ndarray  # (rows, dim)
    in_labels: tuple[str, ...]
    Fv_T: np.ndarray  # (n, m)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def direction_from_z(self, z: np.ndarray) -> GohDirection:
        xi0, u, y, h = self.layout.unpack(z)
        xi = np.einsum("knd,d->kn", self.L, z)
        return GohDirection(self.grid, xi0.copy(), u.copy(), y.copy(), h.copy(), xi)

    def gamma_diag(self) -> np.ndarray:
        return self.layout.gamma_diag(self.grid)


def build_cone(problem: ProblemDef, traj: Trajectory, lin: LinearizedSystem,
               active: tuple[int, ...] = ()) -> DiscretizedCone:
    """Discretize the critical cone along a candidate.

    `active` holds 0-based indices of inequality constraints that are active;
    the cost gradient row is always included among the inequality rows.
    """
    grid = traj.grid
    layout = ConeLayout(problem.n, problem.l, problem.m, grid.N + 1)
    L = _propagation_matrix(lin, layout)
    Fv_T = lin.Fv[-1]
    x0, xT = traj.x[0], traj.x[-1]

    def endpoint_row(em) -> np.ndarray:
        grad = em.gradient(x0, xT)
        c0, cT = grad[: problem.n], grad[problem.n:]
        row = cT @ L[-1]
        row[layout.sl_xi0] += c0
        if problem.m:
            row[layout.sl_h] += cT @ Fv_T
        return row

    A_eq = (np.array([endpoint_row(em) for em in problem.equalities])
            if problem.equalities else np.zeros((0, layout.dim)))
    in_rows = [endpoint_row(problem.cost)]
    labels = ["cost"]
    for i in active:
        in_rows.append(endpoint_row(problem.inequalities[i]))
        labels.append(f"phi{i + 1}")
    return DiscretizedCone(layout, grid, L, A_eq, np.array(in_rows),
                           tuple(labels), Fv_T.copy())


def assemble_form(cone: DiscretizedCone, hb: HBlocks, gm: GohMatrices) -> np.ndarray:
    """Dense symmetric matrix of the reduced transformed form on packed z.

    z^T Q z reproduces the scalar evaluator up to roundoff because both use
    the same node samples, trapezoid weights, and propagation operator.
    """
    lay, L = cone.layout, cone.L
    K, n, l, m = lay.K, lay.n, lay.l, lay.m
    dim = lay.dim
    w = cone.grid.weights
    Q = np.zeros((dim, dim))

    # integral(0.5 xi' Hxx xi): one large GEMM over the stacked node blocks
    HL = np.einsum("kab,kbd->kad", hb.Hxx * w[:, None, None], L)
    Q += 0.5 * L.reshape(K * n, dim).T @ HL.reshape(K * n, dim)

    if l:
        rows = np.einsum("kla,kad->kld", hb.Hux * w[:, None, None], L)
        Q[lay.sl_u] += rows.reshape(K * l, dim)
    if m:
        rows = np.einsum("kma,kad->kmd", gm.M * w[:, None, None], L)
        Q[lay.sl_y] += rows.reshape(K * m, dim)

    for k in range(K):
        if l:
            uc = lay.u_cols(k)
            Q[uc, uc] += 0.5 * w[k] * hb.Huu[k]
        if m and l:
            Q[lay.y_cols(k), lay.u_cols(k)] += w[k] * gm.E[k]
        if m:
            yc = lay.y_cols(k)
            Q[yc, yc] += 0.5 * w[k] * gm.R[k]

    # endpoint form on (xi0, xi_T + Fv_T h) plus the h-coupled terminal terms
    P0 = np.zeros((n, dim))
    P0[:, lay.sl_xi0] = np.eye(n)
    Ph = np.zeros((m, dim))
    if m:
        Ph[:, lay.sl_h] = np.eye(m)
    PT = L[-1] + (cone.Fv_T @ Ph if m else 0.0)
    D = np.vstack([P0, PT])
    Q += 0.5 * D.T @ hb.ell_hess @ D
    if m:
        Q += Ph.T @ (hb.Hvx[-1] @ L[-1])
        Q += 0.5 * Ph.T @ gm.S[-1] @ Ph
    return 0.5 * (Q + Q.T)


def propagate_batch(lin: LinearizedSystem, xi0: np.ndarray, u: np.ndarray,
                    y: np.ndarray) -> np.ndarray:
    """Integrate the transformed state equation for a batch of directions.

    xi0 is (n, q), u is (K, l, q), y is (K, m, q); returns xi (K, n, q) with
    the same stage interpolation as the one-direction integrator.
    """
    K = lin.Fx.shape[0]
    n, q = xi0.shape
    h = lin.grid.h
    out = np.empty((K, n, q))
    out[0] = xi0
    Z = xi0.copy()
    l, m = lin.Fu.shape[2], lin.Fv.shape[2]

    for k in range(K - 1):
        A0, A1 = lin.Fx[k], lin.Fx[k + 1]
        Am = 0.5 * (A0 + A1)
        inputs = []
        if l:
            inputs.append((lin.Fu[k], lin.Fu[k + 1], u[k], u[k + 1]))
        if m:
            inputs.append((lin.B[k], lin.B[k + 1], y[k], y[k + 1]))

        def rhs(A, frac, Zs):
            val = A @ Zs
            for C0, C1, s0, s1 in inputs:
                Cf = (1 - frac) * C0 + frac * C1
                sf = (1 - frac) * s0 + frac * s1
                val = val + Cf @ sf
            return val

        k1 = rhs(A0, 0.0, Z)
        k2 = rhs(Am, 0.5, Z + 0.5 * h * k1)
        k3 = rhs(Am, 0.5, Z + 0.5 * h * k2)
        k4 = rhs(A1, 1.0, Z + h * k3)
        Z = Z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = Z
    return out


def omega_p2_batch(cone: DiscretizedCone, hb: HBlocks, gm: GohMatrices,
                   xi0: np.ndarray, u: np.ndarray, y: np.ndarray, h: np.ndarray,
                   xi: np.ndarray) -> np.ndarray:
    """Reduced transformed form on a batch of unpacked directions (columns)."""
    w = cone.grid.weights
    q = xi0.shape[1]
    m = cone.layout.m
    vals = np.zeros(q)

    xiT = xi[-1]
    top = xi0
    bot = xiT + (cone.Fv_T @ h if m else 0.0)
    end = np.vstack([top, bot])
    vals += 0.5 * np.einsum("aq,ab,bq->q", end, hb.ell_hess, end)
    if m:
        vals += np.einsum("mq,mn,nq->q", h, hb.Hvx[-1], xiT)
        vals += 0.5 * np.einsum("mq,mj,jq->q", h, gm.S[-1], h)

    t1 = np.einsum("knj,kjq->knq", hb.Hxx, xi)
    vals += 0.5 * np.einsum("k,knq,knq->q", w, xi, t1)
    if cone.layout.l:
        t2 = np.einsum("kln,knq->klq", hb.Hux, xi)
        vals += np.einsum("k,klq,klq->q", w, u, t2)
        t3 = np.einsum("klj,kjq->klq", hb.Huu, u)
        vals += 0.5 * np.einsum("k,klq,klq->q", w, u, t3)
    if m:
        t4 = np.einsum("kmn,knq->kmq", gm.M, xi)
        vals += np.einsum("k,kmq,kmq->q", w, y, t4)
        t5 = np.einsum("kmj,kjq->kmq", gm.R, y)
        vals += 0.5 * np.einsum("k,kmq,kmq->q", w, y, t5)
        if cone.layout.l:
            t6 = np.einsum("kml,klq->kmq", gm.E, u)
            vals += np.einsum("k,kmq,kmq->q", w, y, t6)
    return vals


def gamma_batch(cone: DiscretizedCone, xi0: np.ndarray, u: np.ndarray,
                y: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Growth order per column of a batch of unpacked directions."""
    w = cone.grid.weights
    vals = np.einsum("nq,nq->q", xi0, xi0) + np.einsum("mq,mq->q", h, h)
    if cone.layout.l:
        vals += np.einsum("k,klq,klq->q", w, u, u)
    if cone.layout.m:
        vals += np.einsum("k,kmq,kmq->q", w, y, y)
    return vals
