"""Scalar evaluation of the Lagrangian and the second-variation forms.

omega is the second variation in original variables; omega_p is its
transformed version (primitive of the affine control as a variable, free
terminal value h); omega_p2 drops the antisymmetric coupling term and is the
form the integral conditions test.  The transformed forms refuse multipliers
whose classification flags do not license them.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .goh import ClassFlags, GohMatrices, HBlocks
from .multipliers import Multiplier, endpoint_weights
from .problem import ProblemDef
from .trajectory import (Direction, GohDirection, Grid, IntegrationDivergedError,
                         LinearizedSystem, Trajectory, deriv4, integrate_linearized,
                         integrate_state, trapezoid)


class ClassificationError(ValueError):
    """A transformed form was requested for a multiplier outside its class."""


@dataclass(eq=False)
class QuadraticEvaluation:
    """Value of a quadratic form with its named contributions."""

    value: float
    parts: dict

    def to_doc(self) -> dict:
        return {"value": self.value, "parts": {k: float(v) for k, v in self.parts.items()}}


def lagrangian_value(problem: ProblemDef, traj: Trajectory, mult: Multiplier) -> float:
    """Weighted endpoint function plus the costate-weighted dynamics defect.

    The defect integrand p.(F - x') uses the finite-difference derivative of
    the sampled state, so on feasible candidates the integral term is pure
    discretization noise.
    """
    ell = sum(w * em.value(traj.x[0], traj.x[-1])
              for w, em in endpoint_weights(problem, mult.alpha, mult.beta) if w != 0.0)
    F = problem.dynamics_many(traj.x, traj.u, traj.v)
    xdot = deriv4(traj.x, traj.grid.h)
    integrand = np.einsum("kn,kn->k", mult.p, F - xdot)
    return float(ell + trapezoid(integrand, traj.grid))


def omega(hb: HBlocks, d: Direction) -> QuadraticEvaluation:
    """Second variation in original variables on a linearized direction."""
    grid = hb.grid
    end = np.concatenate([d.x0, d.x[-1]])
    parts = {"endpoint": 0.5 * end @ hb.ell_hess @ end}
    x, u, v = d.x, d.u, d.v
    parts["Hxx"] = 0.5 * trapezoid(np.einsum("ka,kab,kb->k", x, hb.Hxx, x), grid)
    parts["Hux"] = trapezoid(np.einsum("kl,kla,ka->k", u, hb.Hux, x), grid)
    parts["Hvx"] = trapezoid(np.einsum("km,kma,ka->k", v, hb.Hvx, x), grid)
    parts["Huu"] = 0.5 * trapezoid(np.einsum("kl,klj,kj->k", u, hb.Huu, u), grid)
    parts["Hvu"] = trapezoid(np.einsum("km,kml,kl->k", v, hb.Hvu, u), grid)
    return QuadraticEvaluation(float(sum(parts.values())), parts)


def _omega_p_parts(gm: GohMatrices, hb: HBlocks, g: GohDirection) -> dict:
    grid = gm.grid
    xi, u, y, h = g.xi, g.u, g.y, g.h
    xiT_shift = xi[-1] + gm.Fv_T @ h
    end = np.concatenate([g.xi0, xiT_shift])
    parts = {
        "endpoint": 0.5 * end @ hb.ell_hess @ end,
        "endpoint_Hvx": h @ hb.Hvx[-1] @ xi[-1],
        "endpoint_S": 0.5 * h @ gm.S[-1] @ h,
    }
    parts["Hxx"] = 0.5 * trapezoid(np.einsum("ka,kab,kb->k", xi, hb.Hxx, xi), grid)
    parts["Hux"] = trapezoid(np.einsum("kl,kla,ka->k", u, hb.Hux, xi), grid)
    parts["M"] = trapezoid(np.einsum("km,kma,ka->k", y, gm.M, xi), grid)
    parts["Huu"] = 0.5 * trapezoid(np.einsum("kl,klj,kj->k", u, hb.Huu, u), grid)
    parts["E"] = trapezoid(np.einsum("km,kml,kl->k", y, gm.E, u), grid)
    parts["R"] = 0.5 * trapezoid(np.einsum("km,kmj,kj->k", y, gm.R, y), grid)
    return parts


def omega_p(gm: GohMatrices, hb: HBlocks, g: GohDirection,
            flags: ClassFlags) -> QuadraticEvaluation:
    """Transformed second variation; needs the multiplier in the u-convex class
    and the direction's original affine control (for the antisymmetric term)."""
    if not flags.in_co_lambda_sharp:
        raise ClassificationError(
            "transformed form needs Huu >= 0 and Hvu = 0 along the multiplier "
            f"(min eig {flags.min_eig_huu:.3g}, max |Hvu| {flags.max_abs_hvu:.3g})")
    parts = _omega_p_parts(gm, hb, g)
    if g.v is None:
        raise ValueError("GohDirection built without v; use omega_p2 or transform a Direction")
    parts["G"] = trapezoid(np.einsum("km,kmj,kj->k", g.v, gm.G, g.y), gm.grid)
    return QuadraticEvaluation(float(sum(parts.values())), parts)


def omega_p2(gm: GohMatrices, hb: HBlocks, g: GohDirection,
             flags: ClassFlags) -> QuadraticEvaluation:
    """Transformed second variation without the antisymmetric term; the
    multiplier must additionally have vanishing control brackets (G = 0)."""
    if not flags.in_g_co_lambda_sharp:
        raise ClassificationError(
            "the reduced form needs the bracket matrix G to vanish along the "
            f"multiplier (max |G| {flags.max_abs_g:.3g}, tol {flags.tol:.3g})")
    parts = _omega_p_parts(gm, hb, g)
    return QuadraticEvaluation(float(sum(parts.values())), parts)


@dataclass(eq=False)
class ProbeResult:
    """Remainder study of the Lagrangian expansion along one direction."""

    slope: float
    saturated: bool
    sigmas: list = field(default_factory=list)
    remainders: list = field(default_factory=list)
    floors: list = field(default_factory=list)
    omega_value: float = 0.0
    lagrangian_reference: float = 0.0
    warnings: list = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "slope": self.slope, "saturated": self.saturated,
            "sigmas": self.sigmas, "remainders": self.remainders,
            "floors": self.floors, "omega_value": self.omega_value,
            "warnings": self.warnings,
        }


def _quadrature_floor(series: np.ndarray, grid: Grid) -> float:
    """Richardson estimate of the trapezoid error of a node-sampled integrand."""
    fine = float(trapezoid(series, grid))
    if grid.N % 2 == 0:
        coarse_grid = Grid(grid.T, grid.N // 2)
        coarse = float(trapezoid(series[::2], coarse_grid))
        return abs(fine - coarse) / 3.0
    return abs(fine) * 1e-12


def expansion_probe(problem: ProblemDef, traj: Trajectory, lin: LinearizedSystem,
                    hb: HBlocks, mult: Multiplier, dx0, du, dv,
                    sigmas=None) -> ProbeResult:
    """Fit the order of the Lagrangian expansion remainder along a direction.

    Integrates the perturbed nonlinear state for each scale sigma, subtracts
    the reference Lagrangian and sigma^2 times the second variation, and fits
    a log-log slope.  Remainders below the self-estimated quadrature floor are
    dropped; if none survive the slope is reported as inf with saturated=True.
    """
    if sigmas is None:
        sigmas = np.logspace(-1, -3, 7)
    grid = traj.grid
    d = integrate_linearized(lin, np.zeros(problem.n) if dx0 is None else dx0, du, dv)
    om = omega(hb, d)
    integrand = (0.5 * np.einsum("ka,kab,kb->k", d.x, hb.Hxx, d.x)
                 + np.einsum("kl,kla,ka->k", d.u, hb.Hux, d.x)
                 + np.einsum("km,kma,ka->k", d.v, hb.Hvx, d.x)
                 + 0.5 * np.einsum("kl,klj,kj->k", d.u, hb.Huu, d.u)
                 + np.einsum("km,kml,kl->k", d.v, hb.Hvu, d.u))
    quad_err = _quadrature_floor(integrand, grid)
    l_ref = lagrangian_value(problem, traj, mult)
    scale = 1.0 + abs(l_ref) + abs(om.value)

    used_sigmas, remainders, floors, notes = [], [], [], []
    for sigma in np.asarray(sigmas, dtype=float):
        x0 = traj.x[0] + sigma * d.x0
        u = traj.u + sigma * d.u
        v = traj.v + sigma * d.v
        try:
            pert = integrate_state(problem, grid, x0, u, v)
        except IntegrationDivergedError as exc:
            msg = f"sigma={sigma:g} diverged at node {exc.node}; dropped"
            notes.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            continue
        l_sigma = lagrangian_value(problem, pert, mult)
        r = l_sigma - l_ref - sigma**2 * om.value
        used_sigmas.append(float(sigma))
        remainders.append(float(r))
        floors.append(float(10.0 * sigma**2 * quad_err + 1e-12 * scale))

    usable = [(s, abs(r)) for s, r, f in zip(used_sigmas, remainders, floors) if abs(r) > f]
    if len(usable) >= 2:
        ls = np.log([s for s, _ in usable])
        lr = np.log([r for _, r in usable])
        slope = float(np.polyfit(ls, lr, 1)[0])
        saturated = False
    else:
        slope, saturated = float("inf"), True
    return ProbeResult(slope, saturated, used_sigmas, remainders, floors,
                       om.value, l_ref, notes)
