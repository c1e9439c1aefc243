"""Problem definition: partially-affine dynamics and polynomial endpoint maps.

The dynamics are x' = f_0(x, u) + sum_i v_i * f_i(x, u) with a nonlinear
control u in R^l and an affine control v in R^m.  Costs and constraints are
polynomials in the endpoint pair (x(0), x(T)).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .polynomials import Polynomial, poly_from_monomials


class ProblemFormatError(ValueError):
    """Raised when a problem document fails validation; message carries the path."""


class VectorField:
    """Vector field on R^n with parameters u in R^l; components are polynomials in (x, u)."""

    def __init__(self, n: int, l: int, components: Sequence[Polynomial]):
        if len(components) != n:
            raise ValueError(f"expected {n} components, got {len(components)}")
        arity = n + l
        for c, poly in enumerate(components):
            if poly.arity != arity:
                raise ValueError(f"component {c} has arity {poly.arity}, expected {arity}")
        self.n = n
        self.l = l
        self.components = tuple(components)
        # first derivatives, indexed [component][variable] over (x, u)
        self._grad = [list(poly.gradient()) for poly in self.components]
        # second derivatives, filled lazily
        self._hess: dict[tuple[int, int, int], Polynomial] = {}

    def _second(self, c: int, i: int, j: int) -> Polynomial:
        if i > j:
            i, j = j, i
        key = (c, i, j)
        if key not in self._hess:
            self._hess[key] = self._grad[c][i].diff(j)
        return self._hess[key]

    def value(self, x: Sequence[float], u: Sequence[float]) -> np.ndarray:
        point = tuple(x) + tuple(u)
        return np.array([poly(point) for poly in self.components])

    def value_many(self, xu: np.ndarray) -> np.ndarray:
        """Evaluate on a (K, n+l) batch of stacked (x, u) points -> (K, n)."""
        return np.stack([poly.eval_many(xu) for poly in self.components], axis=1)

    def jac_x_many(self, xu: np.ndarray) -> np.ndarray:
        """(K, n, n) Jacobian in x."""
        K = xu.shape[0]
        out = np.zeros((K, self.n, self.n))
        for c in range(self.n):
            for j in range(self.n):
                poly = self._grad[c][j]
                if not poly.is_zero():
                    out[:, c, j] = poly.eval_many(xu)
        return out

    def jac_u_many(self, xu: np.ndarray) -> np.ndarray:
        """(K, n, l) Jacobian in u."""
        K = xu.shape[0]
        out = np.zeros((K, self.n, self.l))
        for c in range(self.n):
            for j in range(self.l):
                poly = self._grad[c][self.n + j]
                if not poly.is_zero():
                    out[:, c, j] = poly.eval_many(xu)
        return out

    def hess_contract_many(self, p: np.ndarray, xu: np.ndarray, block: str) -> np.ndarray:
        """sum_c p[:, c] * D2 f_c over the requested block of (x, u) variables.

        block is "xx" -> (K, n, n), "ux" -> (K, l, n), or "uu" -> (K, l, l).
        """
        K = xu.shape[0]
        if block == "xx":
            rows, cols = range(self.n), range(self.n)
            shape = (K, self.n, self.n)
            roff = coff = 0
        elif block == "ux":
            rows, cols = range(self.l), range(self.n)
            shape = (K, self.l, self.n)
            roff, coff = self.n, 0
        elif block == "uu":
            rows, cols = range(self.l), range(self.l)
            shape = (K, self.l, self.l)
            roff = coff = self.n
        else:
            raise ValueError(f"unknown block {block!r}")
        out = np.zeros(shape)
        for c in range(self.n):
            pc = p[:, c]
            for a in rows:
                for b in cols:
                    poly = self._second(c, roff + a, coff + b)
                    if not poly.is_zero():
                        out[:, a, b] += pc * poly.eval_many(xu)
        return out


class EndpointMap:
    """Scalar polynomial in the endpoint pair (x(0), x(T)), arity 2n."""

    def __init__(self, n: int, poly: Polynomial):
        if poly.arity != 2 * n:
            raise ValueError(f"endpoint polynomial has arity {poly.arity}, expected {2 * n}")
        self.n = n
        self.poly = poly
        self._grad = poly.gradient()
        self._hess: dict[tuple[int, int], Polynomial] = {}

    def value(self, x0: Sequence[float], xT: Sequence[float]) -> float:
        return self.poly(tuple(x0) + tuple(xT))

    def gradient(self, x0: Sequence[float], xT: Sequence[float]) -> np.ndarray:
        """Gradient over (x0, xT), shape (2n,)."""
        point = tuple(x0) + tuple(xT)
        return np.array([g(point) for g in self._grad])

    def hessian(self, x0: Sequence[float], xT: Sequence[float]) -> np.ndarray:
        """Hessian over (x0, xT), shape (2n, 2n)."""
        point = tuple(x0) + tuple(xT)
        d = 2 * self.n
        out = np.zeros((d, d))
        for i in range(d):
            for j in range(i, d):
                key = (i, j)
                if key not in self._hess:
                    self._hess[key] = self._grad[i].diff(j)
                val = self._hess[key](point)
                out[i, j] = val
                out[j, i] = val
        return out


@dataclass(frozen=True, eq=False)
class ProblemDef:
    """A partially-affine optimal control problem on a fixed horizon."""

    name: str
    n: int
    l: int
    m: int
    T: float
    fields: tuple[VectorField, ...]  # m+1 fields: drift f_0, then f_1..f_m
    cost: EndpointMap
    inequalities: tuple[EndpointMap, ...] = ()
    equalities: tuple[EndpointMap, ...] = ()
    notes: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.l < 0 or self.m < 0:
            raise ValueError("l and m must be >= 0")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if len(self.fields) != self.m + 1:
            raise ValueError(f"expected {self.m + 1} fields, got {len(self.fields)}")
        for i, f in enumerate(self.fields):
            if f.n != self.n or f.l != self.l:
                raise ValueError(f"field {i} has dims ({f.n}, {f.l}), expected ({self.n}, {self.l})")
        for tag, maps in (("cost", (self.cost,)), ("inequalities", self.inequalities),
                          ("equalities", self.equalities)):
            for j, em in enumerate(maps):
                if em.n != self.n:
                    raise ValueError(f"{tag}[{j}] built for n={em.n}, expected {self.n}")

    @property
    def d_phi(self) -> int:
        return len(self.inequalities)

    @property
    def d_eta(self) -> int:
        return len(self.equalities)

    def dynamics(self, x: Sequence[float], u: Sequence[float], v: Sequence[float]) -> np.ndarray:
        """Right-hand side f_0(x,u) + sum_i v_i f_i(x,u) at a single point."""
        out = self.fields[0].value(x, u)
        for i in range(self.m):
            out += v[i] * self.fields[i + 1].value(x, u)
        return out

    def dynamics_many(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Batched right-hand side over (K, n), (K, l), (K, m) samples."""
        xu = np.concatenate([x, u], axis=1)
        out = self.fields[0].value_many(xu)
        for i in range(self.m):
            out += v[:, i : i + 1] * self.fields[i + 1].value_many(xu)
        return out

    def with_horizon(self, T: float) -> "ProblemDef":
        return ProblemDef(self.name, self.n, self.l, self.m, float(T), self.fields,
                          self.cost, self.inequalities, self.equalities, self.notes)


def _require(doc: Any, key: str, kind, path: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ProblemFormatError(f"{path}: missing key {key!r}")
    val = doc[key]
    if kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ProblemFormatError(f"{path}.{key}: expected a number, got {type(val).__name__}")
        return float(val)
    if not isinstance(val, kind):
        raise ProblemFormatError(f"{path}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def _parse_exponents(entry: dict, key: str, length: int, path: str) -> list[int]:
    if key not in entry:
        raise ProblemFormatError(f"{path}: missing key {key!r}")
    raw = entry[key]
    if not isinstance(raw, list) or len(raw) != length:
        raise ProblemFormatError(f"{path}.{key}: expected a list of length {length}")
    out = []
    for i, e in enumerate(raw):
        if not isinstance(e, int) or isinstance(e, bool) or e < 0:
            raise ProblemFormatError(f"{path}.{key}[{i}]: expected a nonnegative integer")
        out.append(e)
    return out


def _parse_field_poly(doc: Any, n: int, l: int, path: str) -> Polynomial:
    if not isinstance(doc, list):
        raise ProblemFormatError(f"{path}: expected a list of monomials")
    monos = []
    for t, entry in enumerate(doc):
        tpath = f"{path}[{t}]"
        if not isinstance(entry, dict):
            raise ProblemFormatError(f"{tpath}: expected a monomial object")
        coef = _require(entry, "coef", float, tpath)
        ex = _parse_exponents(entry, "x", n, tpath)
        if l > 0 or "u" in entry:
            eu = _parse_exponents(entry, "u", l, tpath)
        else:
            eu = []
        monos.append((coef, ex + eu))
    return poly_from_monomials(n + l, monos)


def _parse_endpoint_poly(doc: Any, n: int, path: str) -> EndpointMap:
    if not isinstance(doc, list):
        raise ProblemFormatError(f"{path}: expected a list of monomials")
    monos = []
    for t, entry in enumerate(doc):
        tpath = f"{path}[{t}]"
        if not isinstance(entry, dict):
            raise ProblemFormatError(f"{tpath}: expected a monomial object")
        coef = _require(entry, "coef", float, tpath)
        ex = _parse_exponents(entry, "x", 2 * n, tpath)
        monos.append((coef, ex))
    return EndpointMap(n, poly_from_monomials(2 * n, monos))


def parse_problem(doc: dict | str | Path, name: str | None = None) -> ProblemDef:
    """Parse a problem document (dict, JSON string, or path to a .json file).

    Layout: {"n", "l", "m", "T", "fields": [[monomial...] per component] per
    field (m+1 fields, drift first), "cost": [monomial...], "inequalities",
    "equalities"}.  Field monomials carry exponent arrays "x" (length n) and
    "u" (length l); endpoint monomials carry "x" of length 2n ordered
    (x(0), x(T)).
    """
    if isinstance(doc, (str, Path)):
        path = Path(doc)
        if path.suffix == ".json" or path.exists():
            try:
                text = path.read_text()
            except OSError as exc:
                raise ProblemFormatError(f"cannot read problem file {path}: {exc}") from exc
            if name is None:
                name = path.stem
        else:
            text = str(doc)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError("$: expected an object")

    n = _require(doc, "n", int, "$")
    l = _require(doc, "l", int, "$")
    m = _require(doc, "m", int, "$")
    T = _require(doc, "T", float, "$")
    fields_doc = _require(doc, "fields", list, "$")
    if len(fields_doc) != m + 1:
        raise ProblemFormatError(f"$.fields: expected {m + 1} fields, got {len(fields_doc)}")
    fields = []
    for i, fdoc in enumerate(fields_doc):
        if not isinstance(fdoc, list) or len(fdoc) != n:
            raise ProblemFormatError(f"$.fields[{i}]: expected {n} components")
        comps = [_parse_field_poly(fdoc[c], n, l, f"$.fields[{i}][{c}]") for c in range(n)]
        fields.append(VectorField(n, l, comps))
    cost = _parse_endpoint_poly(_require(doc, "cost", list, "$"), n, "$.cost")
    ineqs = tuple(
        _parse_endpoint_poly(p, n, f"$.inequalities[{j}]")
        for j, p in enumerate(doc.get("inequalities", []))
    )
    eqs = tuple(
        _parse_endpoint_poly(p, n, f"$.equalities[{j}]")
        for j, p in enumerate(doc.get("equalities", []))
    )
    return ProblemDef(name or str(doc.get("name", "problem")), n, l, m, T,
                      tuple(fields), cost, ineqs, eqs)


def _poly_to_field_doc(poly: Polynomial, n: int, l: int) -> list[dict]:
    return [
        {"coef": coef, "x": list(exps[:n]), "u": list(exps[n:])}
        for exps, coef in sorted(poly.terms.items())
    ]


def _poly_to_endpoint_doc(em: EndpointMap) -> list[dict]:
    return [{"coef": coef, "x": list(exps)} for exps, coef in sorted(em.poly.terms.items())]


def problem_to_doc(problem: ProblemDef) -> dict:
    """Serialize a ProblemDef back to the JSON document layout."""
    return {
        "name": problem.name,
        "n": problem.n,
        "l": problem.l,
        "m": problem.m,
        "T": problem.T,
        "fields": [
            [_poly_to_field_doc(poly, problem.n, problem.l) for poly in f.components]
            for f in problem.fields
        ],
        "cost": _poly_to_endpoint_doc(problem.cost),
        "inequalities": [_poly_to_endpoint_doc(p) for p in problem.inequalities],
        "equalities": [_poly_to_endpoint_doc(p) for p in problem.equalities],
    }
