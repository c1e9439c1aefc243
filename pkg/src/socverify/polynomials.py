"""Sparse multivariate polynomials with exact derivatives.

Dynamics, costs and endpoint constraints are all polynomial, so every
derivative the checker needs (Jacobians, Hessians, Lie brackets) can be
formed exactly; floating point enters only through evaluation.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

Exponents = tuple[int, ...]


class Polynomial:
    """Polynomial in ``arity`` variables, stored as {exponent tuple: coefficient}.

    Terms with zero coefficient are dropped on construction, so two
    polynomials are equal iff their term dicts are equal.
    """

    __slots__ = ("arity", "terms", "_compiled")

    def __init__(self, arity: int, terms: Mapping[Exponents, float] | None = None):
        if arity < 0:
            raise ValueError("arity must be >= 0")
        self.arity = int(arity)
        merged: dict[Exponents, float] = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.arity:
                raise ValueError(f"exponent tuple {exps} has length {len(exps)}, expected {arity}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = merged.get(exps, 0.0) + float(coef)
            if c == 0.0:
                merged.pop(exps, None)
            else:
                merged[exps] = c
        self.terms: dict[Exponents, float] = merged
        # flat form used by the evaluators: (coef, ((var, exp), ...)) per term
        self._compiled = tuple(
            (coef, tuple((i, e) for i, e in enumerate(exps) if e))
            for exps, coef in sorted(merged.items())
        )

    @classmethod
    def zero(cls, arity: int) -> "Polynomial":
        return cls(arity)

    @classmethod
    def constant(cls, arity: int, c: float) -> "Polynomial":
        return cls(arity, {(0,) * arity: c})

    @classmethod
    def variable(cls, arity: int, index: int) -> "Polynomial":
        if not 0 <= index < arity:
            raise ValueError(f"variable index {index} out of range for arity {arity}")
        exps = [0] * arity
        exps[index] = 1
        return cls(arity, {tuple(exps): 1.0})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def __call__(self, point: Sequence[float]) -> float:
        """Evaluate at a single point (pure-python fast path)."""
        total = 0.0
        for coef, factors in self._compiled:
            val = coef
            for i, e in factors:
                val *= point[i] ** e
            total += val
        return total

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at a batch of points, shape (K, arity) -> (K,)."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.arity:
            raise ValueError(f"expected (K, {self.arity}) array, got {points.shape}")
        out = np.zeros(points.shape[0])
        for coef, factors in self._compiled:
            val = np.full(points.shape[0], coef)
            for i, e in factors:
                val *= points[:, i] ** e
            out += val
        return out

    def diff(self, index: int) -> "Polynomial":
        """Exact partial derivative with respect to variable ``index``."""
        if not 0 <= index < self.arity:
            raise ValueError(f"variable index {index} out of range for arity {self.arity}")
        terms: dict[Exponents, float] = {}
        for exps, coef in self.terms.items():
            e = exps[index]
            if e == 0:
                continue
            new = list(exps)
            new[index] = e - 1
            key = tuple(new)
            terms[key] = terms.get(key, 0.0) + coef * e
        return Polynomial(self.arity, terms)

    def gradient(self) -> list["Polynomial"]:
        return [self.diff(i) for i in range(self.arity)]

    def __add__(self, other: "Polynomial | float") -> "Polynomial":
        other = self._coerce(other)
        terms = dict(self.terms)
        for exps, coef in other.terms.items():
            terms[exps] = terms.get(exps, 0.0) + coef
        return Polynomial(self.arity, terms)

    def __radd__(self, other):  # support sum()
        return self.__add__(other)

    def __sub__(self, other: "Polynomial | float") -> "Polynomial":
        return self + (-self._coerce(other))

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.arity, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other: "Polynomial | float") -> "Polynomial":
        if isinstance(other, (int, float)):
            return Polynomial(self.arity, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        terms: dict[Exponents, float] = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                key = tuple(a + b for a, b in zip(ea, eb))
                terms[key] = terms.get(key, 0.0) + ca * cb
        return Polynomial(self.arity, terms)

    def __rmul__(self, other):
        return self.__mul__(other)

    def _coerce(self, other: "Polynomial | float") -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.arity != self.arity:
                raise ValueError(f"arity mismatch: {self.arity} vs {other.arity}")
            return other
        return Polynomial.constant(self.arity, float(other))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.arity == other.arity
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.arity, tuple(sorted(self.terms.items()))))

    def __repr__(self) -> str:
        if not self.terms:
            return f"Polynomial({self.arity}, 0)"
        bits = []
        for exps, coef in sorted(self.terms.items()):
            mono = "*".join(f"z{i}^{e}" if e > 1 else f"z{i}" for i, e in enumerate(exps) if e)
            bits.append(f"{coef:g}*{mono}" if mono else f"{coef:g}")
        return f"Polynomial({self.arity}, {' + '.join(bits)})"


def poly_from_monomials(arity: int, monomials: Iterable[tuple[float, Sequence[int]]]) -> Polynomial:
    """Build a polynomial from (coefficient, exponent list) pairs."""
    terms: dict[Exponents, float] = {}
    for coef, exps in monomials:
        key = tuple(int(e) for e in exps)
        terms[key] = terms.get(key, 0.0) + float(coef)
    return Polynomial(arity, terms)
