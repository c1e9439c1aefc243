"""First-order multipliers: costates, residuals, and the admissible polytope.

A multiplier is (alpha, beta, p): endpoint weights alpha >= 0 (alpha[0] on
the cost), equality weights beta, and the costate p.  The defining
conditions (terminal transversality, costate equation, stationarity in both
controls, initial transversality) are linear in (alpha, beta), so the search
reduces to an SVD null space intersected with the simplex-like normalization
|alpha|_1 + |beta|_1 = 1, alpha >= 0, whose vertices are enumerated.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .problem import ProblemDef
from .trajectory import LinearizedSystem, Trajectory, _rk4_affine, feasibility_report, linearize

VERTEX_ENUM_LIMIT = 12  # enumerate polytope vertices when d_phi + 1 + d_eta <= this
_COMBO_CAP = 200_000


@dataclass(eq=False)
class Multiplier:
    """Endpoint weights and costate samples for one admissible multiplier."""

    alpha: np.ndarray  # (d_phi + 1,), alpha[0] multiplies the cost
    beta: np.ndarray  # (d_eta,)
    p: np.ndarray  # (K, n)

    def l1(self) -> float:
        return float(np.sum(np.abs(self.alpha)) + np.sum(np.abs(self.beta)))

    def scaled(self, factor: float) -> "Multiplier":
        return Multiplier(self.alpha * factor, self.beta * factor, self.p * factor)

    def normalized(self) -> "Multiplier":
        s = self.l1()
        if s == 0:
            raise ValueError("cannot normalize the zero multiplier")
        return self.scaled(1.0 / s)

    def scaled_to_unit_cost(self) -> "Multiplier":
        """Representative with alpha[0] = 1 (requires alpha[0] > 0)."""
        if self.alpha[0] <= 0:
            raise ValueError("cost weight alpha[0] is not positive")
        return self.scaled(1.0 / self.alpha[0])


def endpoint_weights(problem: ProblemDef, alpha: np.ndarray, beta: np.ndarray):
    """Pairs (weight, EndpointMap) over cost, inequalities and equalities."""
    maps = [problem.cost, *problem.inequalities, *problem.equalities]
    weights = list(alpha) + list(beta)
    return list(zip(weights, maps))


def endpoint_gradient(problem: ProblemDef, alpha: np.ndarray, beta: np.ndarray,
                      x0, xT) -> np.ndarray:
    """Gradient over (x0, xT) of the weighted endpoint function, shape (2n,)."""
    out = np.zeros(2 * problem.n)
    for w, em in endpoint_weights(problem, alpha, beta):
        if w != 0.0:
            out += w * em.gradient(x0, xT)
    return out


def endpoint_hessian(problem: ProblemDef, alpha: np.ndarray, beta: np.ndarray,
                     x0, xT) -> np.ndarray:
    """Hessian over (x0, xT) of the weighted endpoint function, shape (2n, 2n)."""
    out = np.zeros((2 * problem.n, 2 * problem.n))
    for w, em in endpoint_weights(problem, alpha, beta):
        if w != 0.0:
            out += w * em.hessian(x0, xT)
    return out


def integrate_costate(problem: ProblemDef, traj: Trajectory, lin: LinearizedSystem,
                      alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Backward RK4 of the costate equation from the terminal transversality value.

    The coefficient is the sampled linearization (p' = -Fx(t)^T p), with the
    same in-step linear interpolation used everywhere else.
    """
    grad = endpoint_gradient(problem, alpha, beta, traj.x[0], traj.x[-1])
    pT = grad[problem.n:]
    A = -np.swapaxes(lin.Fx, 1, 2)
    return _rk4_affine(A, [], pT, lin.grid.h, backward=True)


def multiplier_residuals(problem: ProblemDef, traj: Trajectory, lin: LinearizedSystem,
                         mult: Multiplier) -> dict:
    """Sup-norm residuals of the first-order system for a given multiplier."""
    grad = endpoint_gradient(problem, mult.alpha, mult.beta, traj.x[0], traj.x[-1])
    n = problem.n
    r0 = mult.p[0] + grad[:n]
    rT = mult.p[-1] - grad[n:]
    hu = np.einsum("kn,knl->kl", mult.p, lin.Fu)
    hv = np.einsum("kn,knm->km", mult.p, lin.Fv)
    out = {
        "transversality_initial": float(np.max(np.abs(r0))) if r0.size else 0.0,
        "transversality_terminal": float(np.max(np.abs(rT))) if rT.size else 0.0,
        "stationarity_u": float(np.max(np.abs(hu))) if hu.size else 0.0,
        "stationarity_v": float(np.max(np.abs(hv))) if hv.size else 0.0,
    }
    out["max"] = max(out.values())
    return out


@dataclass(eq=False)
class MultiplierSet:
    """Result of the multiplier search: polytope vertices plus diagnostics."""

    status: str  # ok | infeasible-candidate | no-multiplier | empty-polytope
    vertices: tuple[Multiplier, ...] = ()
    null_basis: np.ndarray | None = None  # (d_phi+1+d_eta, nullity)
    residuals: tuple[dict, ...] = ()
    zero_in_hull: bool = False
    nullity: int = 0
    notes: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.status == "ok" and len(self.vertices) > 0


def _alpha_beta(problem: ProblemDef, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    na = problem.d_phi + 1
    return coeffs[:na], coeffs[na:]


def _vertex_candidates(Gmat: np.ndarray, hvec: np.ndarray, ftol: float) -> list[np.ndarray]:
    """Vertices of {z : G z <= h} by enumerating active sets (small dimensions)."""
    rows, k = Gmat.shape
    if k == 0:
        return []
    if math.comb(rows, k) > _COMBO_CAP:
        raise RuntimeError("vertex enumeration too large")
    out: list[np.ndarray] = []
    for combo in itertools.combinations(range(rows), k):
        sub = Gmat[list(combo)]
        if abs(np.linalg.det(sub)) < 1e-12 * max(1.0, float(np.max(np.abs(sub))) ** k):
            continue
        z = np.linalg.solve(sub, hvec[list(combo)])
        if np.all(Gmat @ z <= hvec + ftol):
            if not any(np.allclose(z, w, atol=10 * ftol) for w in out):
                out.append(z)
    return out


def find_multipliers(problem: ProblemDef, traj: Trajectory,
                     lin: LinearizedSystem | None = None, tol: float = 1e-8,
                     feas_tol: float = 1e-6) -> MultiplierSet:
    """Solve the discretized first-order system for all admissible multipliers.

    Builds the linear residual map on (alpha, beta) by integrating the
    costate for each unit weight vector, extracts its SVD null space with a
    relative threshold tol, and intersects with {alpha >= 0,
    |alpha|_1 + |beta|_1 = 1} via vertex enumeration.  Each returned vertex
    carries a recomputed residual certificate.
    """
    feas = feasibility_report(problem, traj, feas_tol)
    if not feas.feasible:
        return MultiplierSet("infeasible-candidate",
                             notes=[f"candidate infeasible: defect={feas.defect:.3g}, "
                                    f"max|eta|={np.max(np.abs(feas.equality_residuals)) if feas.equality_residuals.size else 0.0:.3g}"])
    if lin is None:
        lin = linearize(problem, traj)
    s = problem.d_phi + 1 + problem.d_eta
    K = traj.grid.N + 1
    n = problem.n

    basis_p = np.empty((s, K, n))
    columns = []
    for i in range(s):
        coeffs = np.zeros(s)
        coeffs[i] = 1.0
        alpha, beta = _alpha_beta(problem, coeffs)
        p = integrate_costate(problem, traj, lin, alpha, beta)
        basis_p[i] = p
        grad = endpoint_gradient(problem, alpha, beta, traj.x[0], traj.x[-1])
        r0 = p[0] + grad[:n]
        hu = np.einsum("kn,knl->kl", p, lin.Fu).ravel()
        hv = np.einsum("kn,knm->km", p, lin.Fv).ravel()
        columns.append(np.concatenate([r0, hu, hv]))
    amap = np.stack(columns, axis=1)
    if amap.shape[0] < s:
        amap = np.vstack([amap, np.zeros((s - amap.shape[0], s))])
    _, sig, vt = np.linalg.svd(amap, full_matrices=False)
    smax = sig[0] if sig.size else 0.0
    rank = int(np.sum(sig > tol * smax)) if smax > 0 else 0
    nullity = s - rank
    if nullity == 0:
        return MultiplierSet("no-multiplier", nullity=0,
                             notes=[f"residual map has trivial null space (smallest sv {sig[-1]:.3g})"])
    null_basis = vt[rank:].T  # (s, nullity)

    # polytope of admissible (alpha, beta) in null-space coordinates:
    # alpha >= 0 and sum(alpha) + sg.beta <= 1 for every sign vector sg
    na = problem.d_phi + 1
    A_alpha = null_basis[:na]
    A_beta = null_basis[na:]
    rows = [-A_alpha]
    for signs in itertools.product((1.0, -1.0), repeat=problem.d_eta):
        rows.append((A_alpha.sum(axis=0) + np.asarray(signs) @ A_beta)[None, :])
    Gmat = np.vstack(rows)
    hvec = np.concatenate([np.zeros(na), np.ones(2**problem.d_eta)])

    notes: list = []
    if s > VERTEX_ENUM_LIMIT:
        notes.append(f"multiplier space dimension {s} exceeds enumeration limit; sampling rays")
        verts = _sample_polytope_rays(null_basis, na, nullity)
    else:
        try:
            zs = _vertex_candidates(Gmat, hvec, ftol=1e-10)
            verts = [null_basis @ z for z in zs]
        except RuntimeError:
            notes.append("vertex enumeration too large; sampling rays")
            verts = _sample_polytope_rays(null_basis, na, nullity)

    vertices: list[Multiplier] = []
    certs: list[dict] = []
    for coeffs in verts:
        l1 = float(np.sum(np.abs(coeffs)))
        if l1 <= 0.5:  # the origin vertex of the truncated cone
            continue
        coeffs = coeffs / l1
        alpha, beta = _alpha_beta(problem, coeffs)
        if np.any(alpha < -1e-12):
            continue
        p = np.einsum("s,skn->kn", coeffs, basis_p)
        mult = Multiplier(np.maximum(alpha, 0.0), beta, p)
        res = multiplier_residuals(problem, traj, lin, mult)
        if res["max"] > 10 * max(tol, tol * smax):
            notes.append(f"dropped vertex with residual {res['max']:.3g}")
            continue
        if any(np.allclose(coeffs, np.concatenate([m.alpha, m.beta]), atol=1e-9)
               for m in vertices):
            continue
        vertices.append(mult)
        certs.append(res)

    if not vertices:
        return MultiplierSet("empty-polytope", null_basis=null_basis, nullity=nullity,
                             notes=notes + ["null space exists but no admissible normalized vertex"])

    zero_in_hull = _zero_in_hull(vertices)
    if zero_in_hull:
        notes.append("0 lies in the convex hull of the multiplier vertices "
                     "(endpoint constraints look unqualified)")
    return MultiplierSet("ok", tuple(vertices), null_basis, tuple(certs),
                         zero_in_hull, nullity, notes)


def _sample_polytope_rays(null_basis: np.ndarray, na: int, nullity: int,
                          count: int = 512, seed: int = 0) -> list[np.ndarray]:
    """Fallback for large multiplier spaces: sample admissible rays, l1-normalize."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        z = rng.standard_normal(nullity)
        coeffs = null_basis @ z
        for cand in (coeffs, -coeffs):
            alpha = cand[:na]
            if np.all(alpha >= -1e-12):
                l1 = np.sum(np.abs(cand))
                if l1 > 0:
                    out.append(cand / l1)
                break
    return out


def _zero_in_hull(vertices: list[Multiplier]) -> bool:
    """Is 0 a convex combination of the vertices' (alpha, beta) vectors?"""
    if len(vertices) < 2:
        return False
    from scipy.optimize import linprog

    pts = np.stack([np.concatenate([m.alpha, m.beta]) for m in vertices], axis=1)
    q = len(vertices)
    A_eq = np.vstack([pts, np.ones((1, q))])
    b_eq = np.concatenate([np.zeros(pts.shape[0]), [1.0]])
    res = linprog(np.zeros(q), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * q,
                  method="highs")
    return bool(res.success)
