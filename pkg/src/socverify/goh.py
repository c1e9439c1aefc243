"""Second-derivative blocks along a multiplier and the transformed coefficients.

Everything here is sampled at the grid nodes.  Derivatives of the
pre-Hamiltonian p.F are exact (polynomial differentiation); only the time
derivatives of sampled series (Hvx, Fv, S, u) use finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .multipliers import Multiplier, endpoint_hessian
from .problem import ProblemDef, VectorField
from .polynomials import Polynomial
from .trajectory import Grid, LinearizedSystem, Trajectory, deriv4


@dataclass(eq=False)
class HBlocks:
    """Second derivatives of the pre-Hamiltonian along (trajectory, multiplier)."""

    grid: Grid
    Hxx: np.ndarray  # (K, n, n)
    Hux: np.ndarray  # (K, l, n)
    Hvx: np.ndarray  # (K, m, n)
    Huu: np.ndarray  # (K, l, l)
    Hvu: np.ndarray  # (K, m, l)
    ell_hess: np.ndarray  # (2n, 2n) endpoint-function Hessian


def h_blocks(problem: ProblemDef, traj: Trajectory, mult: Multiplier) -> HBlocks:
    """Assemble the H blocks.  The affine control enters only through Hvx/Hvu,
    which are first derivatives of the affine fields contracted with p."""
    xu = np.concatenate([traj.x, traj.u], axis=1)
    p = mult.p
    K = traj.grid.N + 1
    n, l, m = problem.n, problem.l, problem.m

    Hxx = problem.fields[0].hess_contract_many(p, xu, "xx")
    Hux = problem.fields[0].hess_contract_many(p, xu, "ux")
    Huu = problem.fields[0].hess_contract_many(p, xu, "uu")
    Hvx = np.zeros((K, m, n))
    Hvu = np.zeros((K, m, l))
    for i in range(m):
        f = problem.fields[i + 1]
        w = traj.v[:, i, None, None]
        Hxx += w * f.hess_contract_many(p, xu, "xx")
        Hux += w * f.hess_contract_many(p, xu, "ux")
        Huu += w * f.hess_contract_many(p, xu, "uu")
        Hvx[:, i, :] = np.einsum("kn,knj->kj", p, f.jac_x_many(xu))
        Hvu[:, i, :] = np.einsum("kn,knj->kj", p, f.jac_u_many(xu))
    ell = endpoint_hessian(problem, mult.alpha, mult.beta, traj.x[0], traj.x[-1])
    return HBlocks(traj.grid, Hxx, Hux, Hvx, Huu, Hvu, ell)


@dataclass(eq=False)
class GohMatrices:
    """Coefficient matrices of the transformed second variation."""

    grid: Grid
    B: np.ndarray  # (K, n, m)
    M: np.ndarray  # (K, m, n)
    E: np.ndarray  # (K, m, l)
    S: np.ndarray  # (K, m, m) symmetric part of Hvx Fv
    G: np.ndarray  # (K, m, m) antisymmetric part of Hvx Fv
    R: np.ndarray  # (K, m, m)
    Fv_T: np.ndarray  # (n, m) affine fields at the terminal node

    def boundary(self) -> dict:
        """Terminal-node slices used by the endpoint form."""
        return {"S_T": self.S[-1], "G_T": self.G[-1]}

    def to_doc(self) -> dict:
        return {
            "t": self.grid.nodes.tolist(),
            "B": self.B.tolist(), "M": self.M.tolist(), "E": self.E.tolist(),
            "S": self.S.tolist(), "G": self.G.tolist(), "R": self.R.tolist(),
        }


def goh_matrices(lin: LinearizedSystem, hb: HBlocks) -> GohMatrices:
    """Form M, E, S, G, R from the linearization and the H blocks.

    Time derivatives of Hvx, S (and of Fv inside lin.B) are 4th-order finite
    differences; everything else is exact sampled algebra.
    """
    h = lin.grid.h
    Fx, Fu, Fv, B = lin.Fx, lin.Fu, lin.Fv, lin.B
    m = Fv.shape[2]
    if m == 0:
        K, n = Fx.shape[0], Fx.shape[1]
        l = Fu.shape[2]
        z = np.zeros
        return GohMatrices(lin.grid, B, z((K, 0, n)), z((K, 0, l)), z((K, 0, 0)),
                           z((K, 0, 0)), z((K, 0, 0)), z((n, 0)))
    Hvx_dot = deriv4(hb.Hvx, h)
    M = (np.einsum("knm,knj->kmj", Fv, hb.Hxx) - Hvx_dot
         - np.einsum("kmn,knj->kmj", hb.Hvx, Fx))
    E = np.einsum("knm,kln->kml", Fv, hb.Hux) - np.einsum("kmn,knl->kml", hb.Hvx, Fu)
    HvxFv = np.einsum("kmn,knj->kmj", hb.Hvx, Fv)
    S = 0.5 * (HvxFv + np.swapaxes(HvxFv, 1, 2))
    G = 0.5 * (HvxFv - np.swapaxes(HvxFv, 1, 2))
    HvxB = np.einsum("kmn,knj->kmj", hb.Hvx, B)
    HxxFv = np.einsum("kab,kbm->kam", hb.Hxx, Fv)
    R = (np.einsum("kna,knb->kab", Fv, HxxFv)
         - (HvxB + np.swapaxes(HvxB, 1, 2)) - deriv4(S, h))
    return GohMatrices(lin.grid, B, M, E, S, G, R, Fv[-1].copy())


def lie_bracket_x(f: VectorField, g: VectorField) -> VectorField:
    """State-space Lie bracket [f, g]^x = (Dx f) g - (Dx g) f, exact in (x, u)."""
    if (f.n, f.l) != (g.n, g.l):
        raise ValueError("fields must share dimensions")
    n = f.n
    comps = []
    for c in range(n):
        acc = Polynomial.zero(n + f.l)
        for b in range(n):
            acc = acc + f._grad[c][b] * g.components[b] - g._grad[c][b] * f.components[b]
        comps.append(acc)
    return VectorField(n, f.l, comps)


def bracket_b_columns(problem: ProblemDef, traj: Trajectory, lin: LinearizedSystem) -> np.ndarray:
    """B recomputed from brackets: column i is
    -[f_i, f_0]^x - sum_j v_j [f_i, f_j]^x + (Du f_i) u'.
    """
    xu = np.concatenate([traj.x, traj.u], axis=1)
    K = traj.grid.N + 1
    n, m = problem.n, problem.m
    out = np.zeros((K, n, m))
    f0 = problem.fields[0]
    for i in range(m):
        fi = problem.fields[i + 1]
        col = -lie_bracket_x(fi, f0).value_many(xu)
        for j in range(m):
            br = lie_bracket_x(fi, problem.fields[j + 1])
            vals = br.value_many(xu)
            col -= traj.v[:, j, None] * vals
        if problem.l > 0:
            col += np.einsum("knl,kl->kn", fi.jac_u_many(xu), lin.udot)
        out[:, :, i] = col
    return out


def bracket_g_values(problem: ProblemDef, traj: Trajectory, mult: Multiplier) -> np.ndarray:
    """G recomputed from brackets: entry (i, j) is p [f_i, f_j]^x / 2."""
    xu = np.concatenate([traj.x, traj.u], axis=1)
    K = traj.grid.N + 1
    m = problem.m
    out = np.zeros((K, m, m))
    for i in range(m):
        for j in range(i + 1, m):
            br = lie_bracket_x(problem.fields[i + 1], problem.fields[j + 1])
            val = 0.5 * np.einsum("kn,kn->k", mult.p, br.value_many(xu))
            out[:, i, j] = val
            out[:, j, i] = -val
    return out


def r_cross_check(problem: ProblemDef, traj: Trajectory, lin: LinearizedSystem,
                  gm: GohMatrices, mult: Multiplier) -> dict:
    """Recompute R through iterated brackets and compare with the direct route.

    Valid when the bracket matrix G vanishes along the multiplier; the
    returned dict carries the max entrywise deviation and both values at the
    worst node.
    """
    xu = np.concatenate([traj.x, traj.u], axis=1)
    K = traj.grid.N + 1
    n, l, m = problem.n, problem.l, problem.m
    alt = np.zeros((K, m, m))
    f0 = problem.fields[0]
    for i in range(m):
        fi = problem.fields[i + 1]
        br0i = lie_bracket_x(f0, fi)
        for j in range(m):
            fj = problem.fields[j + 1]
            vec = lie_bracket_x(fj, br0i).value_many(xu)
            for k in range(m):
                brki = lie_bracket_x(problem.fields[k + 1], fi)
                vec += traj.v[:, k, None] * lie_bracket_x(fj, brki).value_many(xu)
            if l > 0:
                ji = fi.jac_x_many(xu)
                jju = fj.jac_u_many(xu)
                jjx = fj.jac_x_many(xu)
                jiu = fi.jac_u_many(xu)
                W = 2 * np.einsum("kab,kbl->kal", ji, jju) + np.einsum("kab,kbl->kal", jjx, jiu)
                W += _mixed_second_contract(fi, fj, xu)
                vec += np.einsum("kal,kl->ka", W, lin.udot)
            alt[:, i, j] = -np.einsum("kn,kn->k", mult.p, vec)
    dev = np.abs(alt - gm.R)
    worst = np.unravel_index(np.argmax(dev), dev.shape) if dev.size else (0, 0, 0)
    return {
        "max_deviation": float(dev.max()) if dev.size else 0.0,
        "node": int(worst[0]),
        "direct": gm.R[worst] if dev.size else 0.0,
        "bracket": alt[worst] if dev.size else 0.0,
    }


def _mixed_second_contract(fi: VectorField, fj: VectorField, xu: np.ndarray) -> np.ndarray:
    """C[c, a] = sum_b d2 (f_i)_c / du_a dx_b * (f_j)_b, evaluated on the batch."""
    n, l = fi.n, fi.l
    K = xu.shape[0]
    out = np.zeros((K, n, l))
    for c in range(n):
        for a in range(l):
            for b in range(n):
                poly = fi._second(c, n + a, b) * fj.components[b]
                if not poly.is_zero():
                    out[:, c, a] += poly.eval_many(xu)
    return out


@dataclass(eq=False)
class ClassFlags:
    """Pointwise classification of a multiplier for the transformed forms."""

    in_co_lambda_sharp: bool  # Huu >= 0 and Hvu = 0 at every node
    in_g_co_lambda_sharp: bool  # additionally G = 0 at every node
    min_eig_huu: float
    max_abs_hvu: float
    max_abs_g: float
    tol: float

    def to_doc(self) -> dict:
        return {
            "in_co_lambda_sharp": self.in_co_lambda_sharp,
            "in_g_co_lambda_sharp": self.in_g_co_lambda_sharp,
            "min_eig_huu": self.min_eig_huu,
            "max_abs_hvu": self.max_abs_hvu,
            "max_abs_g": self.max_abs_g,
            "tol": self.tol,
        }


def classify_multiplier(hb: HBlocks, gm: GohMatrices | None, tol: float = 1e-8) -> ClassFlags:
    """Check the pointwise sign structure a multiplier needs before the
    transformed forms apply (convexity in u, no u-coupling, commuting brackets)."""
    if hb.Huu.shape[1] == 0:
        min_eig = np.inf
    else:
        min_eig = float(np.min(np.linalg.eigvalsh(hb.Huu)))
    max_hvu = float(np.max(np.abs(hb.Hvu))) if hb.Hvu.size else 0.0
    max_g = float(np.max(np.abs(gm.G))) if gm is not None and gm.G.size else 0.0
    in_sharp = min_eig >= -tol and max_hvu <= tol
    return ClassFlags(in_sharp, in_sharp and max_g <= tol, min_eig, max_hvu, max_g, tol)
