"""Optimality-condition checks on a discretized candidate.

pointwise_report evaluates the algebraic sign conditions node by node.
necessity_scan samples the discretized critical cone for directions where the
reduced transformed form goes negative, then sharpens the worst direction by
repeated two-dimensional Rayleigh searches.  sufficiency_check certifies a
uniform-positivity lower bound by an exact constrained eigensolve.
full_report chains the stages with the gating the theory imposes and maps the
outcome to a process exit code.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .cone import (DiscretizedCone, assemble_form, build_cone, gamma_batch,
                   omega_p2_batch, propagate_batch)
from .forms import omega_p2
from .goh import (ClassFlags, GohMatrices, HBlocks, bracket_b_columns,
                  bracket_g_values, classify_multiplier, goh_matrices, h_blocks,
                  r_cross_check)
from .multipliers import Multiplier, MultiplierSet, find_multipliers
from .problem import ProblemDef
from .trajectory import (FeasibilityReport, GohDirection, LinearizedSystem,
                         Trajectory, feasibility_report, gamma_order, linearize)

MAX_VERTICES = 16


@dataclass(eq=False)
class VertexData:
    """A multiplier vertex with everything the quadratic forms need."""

    mult: Multiplier
    hb: HBlocks
    gm: GohMatrices
    flags: ClassFlags


def prepare_vertices(problem: ProblemDef, traj: Trajectory, lin: LinearizedSystem,
                     mset: MultiplierSet, tol: float = 1e-8) -> list[VertexData]:
    out = []
    for mult in mset.vertices[:MAX_VERTICES]:
        hb = h_blocks(problem, traj, mult)
        gm = goh_matrices(lin, hb)
        out.append(VertexData(mult, hb, gm, classify_multiplier(hb, gm, tol)))
    return out


def _form_scale(vdata: list[VertexData]) -> float:
    """Magnitude of the form coefficients, used to make tolerances relative."""
    s = 0.0
    for vd in vdata:
        for arr in (vd.hb.Hxx, vd.hb.Hux, vd.hb.Huu, vd.hb.ell_hess,
                    vd.gm.M, vd.gm.E, vd.gm.R, vd.gm.S):
            if arr.size:
                s = max(s, float(np.max(np.abs(arr))))
    return 1.0 + s


def _stacked_eigs(top_left: np.ndarray, off: np.ndarray, bottom: np.ndarray) -> np.ndarray:
    """Node-wise min eigenvalue of [[top_left, off^T], [off, bottom]]."""
    K = top_left.shape[0]
    l, m = top_left.shape[1], off.shape[1]
    blk = np.zeros((K, l + m, l + m))
    blk[:, :l, :l] = top_left
    blk[:, l:, :l] = off
    blk[:, :l, l:] = np.swapaxes(off, 1, 2)
    blk[:, l:, l:] = bottom
    if l + m == 0:
        return np.full(K, np.inf)
    return np.linalg.eigvalsh(blk)[:, 0]


def pointwise_report(problem: ProblemDef, traj: Trajectory, lin: LinearizedSystem,
                     vdata: list[VertexData], tol: float = 1e-8) -> dict:
    """Node-by-node sign conditions, evaluated for every multiplier vertex.

    The conditions are existential over the multiplier set, so the aggregate
    margin of each test is the best value any vertex achieves.
    """
    K = traj.grid.N + 1
    m = problem.m
    b_dev = 0.0
    if m:
        b_alt = bracket_b_columns(problem, traj, lin)
        b_dev = float(np.max(np.abs(b_alt - lin.B)))
    per_vertex = []
    for vd in vdata:
        zero_mm = np.zeros((K, m, m))
        lc_min = float(np.min(_stacked_eigs(vd.hb.Huu, vd.hb.Hvu, zero_mm)))
        g_max = vd.flags.max_abs_g
        g_dev = 0.0
        if m > 1:
            g_alt = bracket_g_values(problem, traj, vd.mult)
            g_dev = float(np.max(np.abs(g_alt - vd.gm.G)))
        blk_min = float(np.min(_stacked_eigs(vd.hb.Huu, vd.gm.E, vd.gm.R)))
        entry = {
            "lc_min_eig": lc_min,
            "g_max_abs": g_max,
            "g_bracket_deviation": g_dev,
            "block_min_eig": blk_min,
            "flags": vd.flags.to_doc(),
        }
        if vd.flags.in_g_co_lambda_sharp and m:
            entry["r_cross_check"] = r_cross_check(problem, traj, lin, vd.gm, vd.mult)
        per_vertex.append(entry)
    scale = _form_scale(vdata)
    agg = {
        "lc_min_eig": max((e["lc_min_eig"] for e in per_vertex), default=-np.inf),
        "g_max_abs": min((e["g_max_abs"] for e in per_vertex), default=np.inf),
        "block_min_eig": max((e["block_min_eig"] for e in per_vertex), default=-np.inf),
        "b_bracket_deviation": b_dev,
        "scale": scale,
        "per_vertex": per_vertex,
    }
    return agg


def _smooth_basis(grid, n_modes: int = 4) -> np.ndarray:
    """Low-frequency sample basis: affine part plus damped Fourier modes."""
    t = grid.nodes / grid.T
    cols = [np.ones_like(t), t - 0.5]
    for k in range(1, n_modes + 1):
        damp = 1.0 / (1 + k)
        cols.append(damp * np.cos(np.pi * k * t))
        cols.append(damp * np.sin(np.pi * k * t))
    return np.stack(cols, axis=1)


def _sample_packed(cone: DiscretizedCone, rng: np.random.Generator, q: int) -> np.ndarray:
    lay = cone.layout
    Z = np.zeros((lay.dim, q))
    Z[lay.sl_xi0] = rng.standard_normal((lay.n, q))
    phi = _smooth_basis(cone.grid)
    nb = phi.shape[1]
    if lay.l:
        coeffs = rng.standard_normal((nb, lay.l * q))
        Z[lay.sl_u] = (phi @ coeffs).reshape(lay.K * lay.l, q)
    if lay.m:
        coeffs = rng.standard_normal((nb, lay.m * q))
        Z[lay.sl_y] = (phi @ coeffs).reshape(lay.K * lay.m, q)
        Z[lay.sl_h] = rng.standard_normal((lay.m, q))
    return Z


def _equality_rowspace(cone: DiscretizedCone) -> np.ndarray | None:
    if cone.A_eq.shape[0] == 0:
        return None
    basis = scipy.linalg.orth(cone.A_eq.T)
    return basis if basis.shape[1] else None


def _project_equalities(Z: np.ndarray, rowspace: np.ndarray | None) -> np.ndarray:
    if rowspace is not None:
        Z = Z - rowspace @ (rowspace.T @ Z)
    return Z


def _inequality_tols(cone: DiscretizedCone) -> np.ndarray:
    norms = np.linalg.norm(cone.A_in, axis=1)
    return 1e-9 * np.maximum(1.0, norms)


def _omega_gamma(cone: DiscretizedCone, lin: LinearizedSystem,
                 vdata: list[VertexData], Z: np.ndarray):
    """Per-vertex form values and growth orders for packed columns."""
    xi0, u, y, h = cone.layout.unpack(Z)
    xi = propagate_batch(lin, xi0, u, y)
    om = np.stack([omega_p2_batch(cone, vd.hb, vd.gm, xi0, u, y, h, xi)
                   for vd in vdata])
    return om, gamma_batch(cone, xi0, u, y, h)


def _refine_direction(cone: DiscretizedCone, lin: LinearizedSystem,
                      vdata: list[VertexData], z: np.ndarray,
                      rng: np.random.Generator, rowspace, rounds: int = 60,
                      probes: int = 8, patience: int = 12,
                      n_theta: int = 720) -> tuple[np.ndarray, float]:
    """Lower the worst-vertex Rayleigh ratio by exact searches in random planes.

    Each round draws smooth probe directions, restricts the quadratics to the
    plane spanned by the current direction and a probe (three evaluations per
    probe fix them exactly), and takes the best feasible point on the circle.
    """
    gdiag = cone.gamma_diag()
    ftol = _inequality_tols(cone)
    theta = np.linspace(0.0, np.pi, n_theta, endpoint=False)
    ct, st = np.cos(theta), np.sin(theta)
    z = z / np.sqrt(float(z @ (gdiag * z)))
    om_z, _ = _omega_gamma(cone, lin, vdata, z[:, None])
    best = float(np.max(om_z[:, 0]))
    stall = 0
    for _ in range(rounds):
        P = _sample_packed(cone, rng, probes)
        P = _project_equalities(P, rowspace)
        gp = np.sqrt(np.maximum(np.einsum("dq,d,dq->q", P, gdiag, P), 1e-300))
        P /= gp[None, :]
        cols = np.concatenate([z[:, None], P, z[:, None] + P], axis=1)
        om, _ = _omega_gamma(cone, lin, vdata, cols)
        a = om[:, 0]
        b = om[:, 1:1 + probes]
        cross = 0.5 * (om[:, 1 + probes:] - a[:, None] - b)
        gcross = (z * gdiag) @ P  # gamma(z)=gamma(p)=1
        az = cone.A_in @ z
        ap = cone.A_in @ P

        om_t = (a[:, None, None] * ct[None, None, :] ** 2
                + b[:, :, None] * st[None, None, :] ** 2
                + 2.0 * cross[:, :, None] * (ct * st)[None, None, :])
        gam_t = 1.0 + 2.0 * gcross[:, None] * (ct * st)[None, :]
        ratio = np.max(om_t, axis=0) / np.maximum(gam_t, 1e-12)
        lin_t = az[:, None, None] * ct[None, None, :] + ap[:, :, None] * st[None, None, :]
        feas_pos = np.all(lin_t <= ftol[:, None, None], axis=0)
        feas_neg = np.all(-lin_t <= ftol[:, None, None], axis=0)
        ratio = np.where(feas_pos | feas_neg, ratio, np.inf)
        ratio = np.where(gam_t > 1e-9, ratio, np.inf)

        j, k = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
        val = float(ratio[j, k])
        if val < best - 1e-14 * (1.0 + abs(best)):
            sign = 1.0 if feas_pos[j, k] else -1.0
            z = sign * (ct[k] * z + st[k] * P[:, j])
            z = z / np.sqrt(float(z @ (gdiag * z)))
            best = val
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                break
    return z, best


@dataclass(eq=False)
class ScanResult:
    """Outcome of the critical-cone sampling scan."""

    status: str  # ok | blocked
    verdict: str  # satisfied | violated | not-run
    min_ratio: float = np.inf
    sampled_min: float = np.inf
    samples_used: int = 0
    rejected: int = 0
    vertex_count: int = 0
    witness: GohDirection | None = None
    witness_vertex: int = -1
    pos_tol: float = 0.0
    notes: list = field(default_factory=list)

    def to_doc(self) -> dict:
        doc = {
            "status": self.status, "verdict": self.verdict,
            "min_ratio": _f(self.min_ratio), "sampled_min": _f(self.sampled_min),
            "samples_used": self.samples_used, "rejected": self.rejected,
            "vertex_count": self.vertex_count, "pos_tol": self.pos_tol,
            "notes": list(self.notes),
        }
        if self.witness is not None:
            doc["witness"] = _direction_doc(self.witness)
            doc["witness_vertex"] = self.witness_vertex
        return doc


def _f(x) -> float | None:
    x = float(x)
    return None if not np.isfinite(x) else x


def _direction_doc(g: GohDirection) -> dict:
    return {
        "xi0": g.xi0.tolist(),
        "h": g.h.tolist(),
        "u_max_abs": float(np.max(np.abs(g.u))) if g.u.size else 0.0,
        "y_max_abs": float(np.max(np.abs(g.y))) if g.y.size else 0.0,
        "gamma": gamma_order(g),
    }


def necessity_scan(problem: ProblemDef, traj: Trajectory, lin: LinearizedSystem,
                   cone: DiscretizedCone, vdata: list[VertexData],
                   samples: int = 1000, seed: int = 0,
                   tol: float = 1e-8, refine: bool = True) -> ScanResult:
    """Search the cone for a direction on which every admissible multiplier's
    reduced form is negative.

    Samples smooth directions, projects them onto the equality rows, keeps the
    inequality-feasible ones (or their negatives), and normalizes by the
    growth order.  The reported minimum of max-over-vertices ratios is then
    refined; a value below -tol*scale certifies a necessary-condition failure.
    """
    if not vdata:
        return ScanResult("blocked", "not-run",
                          notes=["no admissible multiplier for the reduced form"])
    rng = np.random.default_rng(seed)
    rowspace = _equality_rowspace(cone)
    ftol = _inequality_tols(cone)
    kept = []
    rejected = 0
    rounds = 0
    while sum(c.shape[1] for c in kept) < samples and rounds < 20:
        Z = _sample_packed(cone, rng, samples)
        Z = _project_equalities(Z, rowspace)
        vals = cone.A_in @ Z
        ok = np.all(vals <= ftol[:, None], axis=0)
        flip = np.all(-vals <= ftol[:, None], axis=0) & ~ok
        Z[:, flip] *= -1.0
        keep = ok | flip
        rejected += int(np.sum(~keep))
        Z = Z[:, keep]
        g = np.einsum("dq,d,dq->q", Z, cone.gamma_diag(), Z)
        good = g > 1e-18
        Z = Z[:, good] / np.sqrt(g[good])[None, :]
        if Z.shape[1]:
            kept.append(Z)
        rounds += 1
    if not kept:
        return ScanResult("blocked", "not-run", rejected=rejected,
                          notes=["no inequality-feasible sample found"])
    Z = np.concatenate(kept, axis=1)[:, :samples]
    om, _ = _omega_gamma(cone, lin, vdata, Z)  # columns already unit gamma
    worst = np.max(om, axis=0)
    imin = int(np.argmin(worst))
    sampled_min = float(worst[imin])

    z_best, min_ratio = Z[:, imin], sampled_min
    if refine:
        z_best, min_ratio = _refine_direction(cone, lin, vdata, Z[:, imin],
                                              rng, rowspace)
    pos_tol = tol * _form_scale(vdata)
    verdict = "violated" if min_ratio < -pos_tol else "satisfied"
    witness = cone.direction_from_z(z_best) if min_ratio < -pos_tol else None
    om_w, _ = _omega_gamma(cone, lin, vdata, z_best[:, None])
    wvert = int(np.argmax(om_w[:, 0]))
    return ScanResult("ok", verdict, min_ratio, sampled_min, Z.shape[1],
                      rejected, len(vdata), witness, wvert, pos_tol)


@dataclass(eq=False)
class SufficiencyResult:
    """Outcome of the uniform-positivity eigensolve."""

    status: str  # ok | blocked
    verdict: str  # satisfied | violated | inconclusive | not-run
    rho_hat: float = -np.inf
    vertex_index: int = -1
    per_vertex: list = field(default_factory=list)
    nullspace_dim: int = 0
    worst: GohDirection | None = None
    consistency: dict = field(default_factory=dict)
    sampled: dict | None = None
    pos_tol: float = 0.0
    caveats: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_doc(self) -> dict:
        doc = {
            "status": self.status, "verdict": self.verdict,
            "rho_hat": _f(self.rho_hat), "vertex_index": self.vertex_index,
            "per_vertex": [_f(v) for v in self.per_vertex],
            "nullspace_dim": self.nullspace_dim, "pos_tol": self.pos_tol,
            "caveats": list(self.caveats), "notes": list(self.notes),
            "consistency": {k: _f(v) for k, v in self.consistency.items()},
        }
        if self.worst is not None:
            doc["worst_direction"] = _direction_doc(self.worst)
        if self.sampled is not None:
            doc["sampled"] = self.sampled
        return doc


def sufficiency_check(problem: ProblemDef, traj: Trajectory, lin: LinearizedSystem,
                      cone: DiscretizedCone, vdata: list[VertexData],
                      tol: float = 1e-8, mode: str = "subspace",
                      samples: int = 200, seed: int = 0) -> SufficiencyResult:
    """Certified lower bound for the reduced form over the discretized cone.

    For each admissible multiplier the form is restricted to the null space of
    the constraint rows (inequality rows are treated as equalities, flagged as
    a caveat when that actually tightens the cone) and whitened by the
    diagonal growth-order Gram; the smallest eigenvalue is exact there.  The
    bound kept is the best one across multipliers.  In cone mode a sampling
    scan over the true inequality cone supplements the subspace bound.
    """
    if mode not in ("subspace", "cone"):
        raise ValueError(f"unknown sufficiency mode {mode!r}")
    if not vdata:
        return SufficiencyResult("blocked", "not-run",
                                 notes=["no admissible multiplier for the reduced form"])
    gdiag = cone.gamma_diag()
    d = np.sqrt(gdiag)
    A = np.vstack([cone.A_eq, cone.A_in])
    labels = tuple(f"eta{j + 1}" for j in range(cone.A_eq.shape[0])) + cone.in_labels
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 1e-11 * max(1.0, float(norms.max(initial=0.0)))
    caveats = []
    eq_span = _equality_rowspace(cone)
    binding = []
    for i in range(cone.A_eq.shape[0], len(labels)):
        if not keep[i]:
            continue
        resid = A[i] if eq_span is None else A[i] - eq_span @ (eq_span.T @ A[i])
        if np.linalg.norm(resid) > 1e-10 * norms[i]:
            binding.append(labels[i])
    if binding:
        caveats.append("inequality rows treated as equalities in the eigensolve: "
                       + ", ".join(binding))
    Aw = (A[keep] / d[None, :]) / norms[keep, None]

    dim = cone.dim
    if Aw.shape[0]:
        Qf, Rf, _ = scipy.linalg.qr(Aw.T, pivoting=True)
        diag = np.abs(np.diag(Rf))
        rank = int(np.sum(diag > 1e-10 * diag[0])) if diag.size else 0
        basis = Qf[:, rank:]
    else:
        basis = None
    nullspace_dim = dim - Aw.shape[0] if basis is None else basis.shape[1]
    if nullspace_dim == 0:
        return SufficiencyResult("ok", "satisfied", np.inf, -1, [], 0,
                                 notes=["constraints leave no direction to test"],
                                 caveats=caveats)

    per_vertex, pairs, scale_q = [], [], 0.0
    for vd in vdata:
        Q = assemble_form(cone, vd.hb, vd.gm)
        Qw = (Q / d[:, None]) / d[None, :]
        scale_q = max(scale_q, float(np.max(np.abs(Qw))))
        Qred = Qw if basis is None else basis.T @ (Qw @ basis)
        Qred = 0.5 * (Qred + Qred.T)
        val, vec = scipy.linalg.eigh(Qred, subset_by_index=[0, 0])
        per_vertex.append(float(val[0]))
        pairs.append((Q, vec[:, 0]))
    idx = int(np.argmax(per_vertex))
    rho_hat = per_vertex[idx]
    Qbest, vec = pairs[idx]
    w = vec if basis is None else basis @ vec
    z = w / d
    worst = cone.direction_from_z(z)
    quad = float(z @ (Qbest @ z))
    scalar = omega_p2(vdata[idx].gm, vdata[idx].hb, worst, vdata[idx].flags)
    consistency = {
        "quadratic": quad,
        "scalar": scalar.value,
        "gamma": gamma_order(worst),
        "deviation": abs(quad - scalar.value),
    }

    pos_tol = max(tol, 1e-12 * dim) * (1.0 + scale_q)
    if rho_hat > pos_tol:
        verdict = "satisfied"
    elif rho_hat < -pos_tol:
        verdict = "violated"
    else:
        verdict = "inconclusive"

    sampled_doc = None
    if mode == "cone" and samples > 0:
        scan = necessity_scan(problem, traj, lin, cone, vdata,
                              samples=samples, seed=seed, tol=tol)
        sampled_doc = scan.to_doc()
        if scan.status == "ok" and scan.min_ratio < -pos_tol and verdict == "satisfied":
            verdict = "violated"
            caveats.append("cone sampling found a negative direction outside "
                           "the equality subspace")
    return SufficiencyResult("ok", verdict, rho_hat, idx, per_vertex,
                             nullspace_dim, worst, consistency, sampled_doc,
                             pos_tol, caveats)


@dataclass
class CheckConfig:
    """Knobs of the staged verification pipeline."""

    tol: float = 1e-8
    feas_tol: float = 1e-6
    samples: int = 1000
    seed: int = 0
    mode: str = "full"  # simulate | multipliers | pointwise | necessary | sufficient | full
    sufficiency_mode: str = "subspace"  # subspace | cone


@dataclass(eq=False)
class ConditionReport:
    """Verdict for one named condition; margin is the decision scalar."""

    id: str
    verdict: str  # satisfied | violated | inconclusive | blocked | not-run
    margin: float | None = None
    details: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {"id": self.id, "verdict": self.verdict,
                "margin": None if self.margin is None else _f(self.margin),
                "details": self.details}


@dataclass(eq=False)
class FullReport:
    """Staged verification outcome for one candidate."""

    problem_name: str
    mode: str
    grid_n: int
    horizon: float
    conditions: list
    stages: dict
    notes: list = field(default_factory=list)
    directions: dict = field(default_factory=dict)  # witness objects, not serialized

    @property
    def exit_code(self) -> int:
        verdicts = [c.verdict for c in self.conditions]
        if any(v == "violated" for v in verdicts):
            return 1
        if any(v in ("blocked", "inconclusive") for v in verdicts):
            return 2
        return 0

    def to_doc(self) -> dict:
        return {
            "schema": 1,
            "problem": self.problem_name,
            "mode": self.mode,
            "grid": {"N": self.grid_n, "T": self.horizon},
            "conditions": [c.to_doc() for c in self.conditions],
            "stages": self.stages,
            "exit_code": self.exit_code,
            "notes": list(self.notes),
        }


def full_report(problem: ProblemDef, traj: Trajectory,
                cfg: CheckConfig | None = None) -> FullReport:
    """Run the staged pipeline on a candidate and aggregate per-condition verdicts.

    Stage order: feasibility, multiplier search, classification, pointwise
    sign conditions, cone scan (necessary), uniform positivity (sufficient).
    Later stages are blocked when an earlier one removes their hypothesis.
    """
    cfg = cfg or CheckConfig()
    conditions: list[ConditionReport] = []
    stages: dict = {}
    rep = FullReport(problem.name, cfg.mode, traj.grid.N, traj.grid.T,
                     conditions, stages)

    feas = feasibility_report(problem, traj, cfg.feas_tol)
    stages["feasibility"] = feas.to_doc()
    conditions.append(ConditionReport(
        "feasibility", "satisfied" if feas.feasible else "blocked",
        margin=None, details={"defect": feas.defect}))
    if cfg.mode == "simulate" or not feas.feasible:
        return rep

    lin = linearize(problem, traj)
    mset = find_multipliers(problem, traj, lin, tol=cfg.tol, feas_tol=cfg.feas_tol)
    stages["multipliers"] = {
        "status": mset.status, "count": len(mset.vertices),
        "nullity": mset.nullity, "zero_in_hull": mset.zero_in_hull,
        "residuals": [dict(r) for r in mset.residuals], "notes": list(mset.notes),
    }
    if mset.status == "infeasible-candidate":
        conditions.append(ConditionReport("multiplier-existence", "blocked",
                                          details={"status": mset.status}))
        return rep
    conditions.append(ConditionReport(
        "multiplier-existence", "satisfied" if mset.found else "violated",
        margin=float(len(mset.vertices)), details={"status": mset.status}))
    if cfg.mode == "multipliers" or not mset.found:
        return rep

    vdata = prepare_vertices(problem, traj, lin, mset, cfg.tol)
    stages["classification"] = [vd.flags.to_doc() for vd in vdata]

    pw = pointwise_report(problem, traj, lin, vdata, cfg.tol)
    stages["pointwise"] = pw
    scale = pw["scale"]
    conditions.append(ConditionReport(
        "legendre-clebsch",
        "satisfied" if pw["lc_min_eig"] >= -cfg.tol * scale else "violated",
        margin=pw["lc_min_eig"]))
    if problem.m:
        conditions.append(ConditionReport(
            "control-bracket",
            "satisfied" if pw["g_max_abs"] <= cfg.tol * scale else "violated",
            margin=pw["g_max_abs"],
            details={"b_bracket_deviation": pw["b_bracket_deviation"]}))
    conditions.append(ConditionReport(
        "coupling-block",
        "satisfied" if pw["block_min_eig"] >= -cfg.tol * scale else "violated",
        margin=pw["block_min_eig"]))
    if cfg.mode == "pointwise":
        return rep

    admissible = [vd for vd in vdata if vd.flags.in_g_co_lambda_sharp]
    cone = build_cone(problem, traj, lin, feas.active_inequalities)

    if cfg.mode in ("necessary", "full"):
        scan = necessity_scan(problem, traj, lin, cone, admissible,
                              samples=cfg.samples, seed=cfg.seed, tol=cfg.tol)
        stages["necessity"] = scan.to_doc()
        rep.directions["necessity"] = scan.witness
        verdict = scan.verdict if scan.status == "ok" else "blocked"
        conditions.append(ConditionReport(
            "cone-nonnegativity", verdict,
            margin=None if not np.isfinite(scan.min_ratio) else scan.min_ratio,
            details={"notes": list(scan.notes)}))
        if cfg.mode == "necessary":
            return rep

    suff = sufficiency_check(problem, traj, lin, cone, admissible, tol=cfg.tol,
                             mode=cfg.sufficiency_mode,
                             samples=min(cfg.samples, 200), seed=cfg.seed)
    stages["sufficiency"] = suff.to_doc()
    rep.directions["sufficiency"] = suff.worst
    verdict = suff.verdict if suff.status == "ok" else "blocked"
    conditions.append(ConditionReport(
        "uniform-positivity", verdict,
        margin=None if not np.isfinite(suff.rho_hat) else suff.rho_hat,
        details={"caveats": list(suff.caveats), "notes": list(suff.notes)}))
    return rep
