"""Sparse polynomials with rational coefficients.

Variables are integers: ``j >= 0`` stands for the atomic proportion term
u_{j+1} and ``-i`` for the tolerance variable eps_i.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

Monomial = tuple  # tuple of (var, exponent) pairs sorted by var


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def eps_var(i: int) -> int:
    return -int(i)


class Poly:
    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        t = {}
        for m, c in (terms or {}).items():
            c = Fraction(c)
            if c != 0:
                t[m] = c
        self.terms = t
        self._hash = None

    # -- constructors
    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(): Fraction(c)})

    @classmethod
    def var(cls, v: int) -> "Poly":
        return cls({((v, 1),): Fraction(1)})

    @classmethod
    def u(cls, j: int) -> "Poly":
        return cls.var(j)

    @classmethod
    def eps(cls, i: int) -> "Poly":
        return cls.var(eps_var(i))

    # -- arithmetic
    def __add__(self, other):
        other = _coerce(other)
        t = dict(self.terms)
        for m, c in other.terms.items():
            t[m] = t.get(m, 0) + c
        return Poly(t)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        t: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                t[m] = t.get(m, 0) + c1 * c2
        return Poly(t)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Poly):
            try:
                other = _coerce(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # -- inspection
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m == () for m in self.terms)

    def constant(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def variables(self) -> set[int]:
        return {v for m in self.terms for v, _ in m}

    def atom_vars(self) -> set[int]:
        return {v for v in self.variables() if v >= 0}

    def eps_indices(self) -> set[int]:
        return {-v for v in self.variables() if v < 0}

    def degree(self, only_atoms: bool = True) -> int:
        best = 0
        for m in self.terms:
            d = sum(e for v, e in m if v >= 0 or not only_atoms)
            best = max(best, d)
        return best

    def is_linear(self) -> bool:
        return self.degree(False) <= 1

    def is_positive(self) -> bool:
        """Nonzero with every coefficient strictly positive."""
        return bool(self.terms) and all(c > 0 for c in self.terms.values())

    def all_nonneg(self) -> bool:
        return all(c >= 0 for c in self.terms.values())

    def all_nonpos(self) -> bool:
        return all(c <= 0 for c in self.terms.values())

    def split_eps(self, i: int) -> tuple["Poly", "Poly"] | None:
        """Write self = p0 + p1 * eps_i with eps_i absent from p0, p1; else None."""
        v = eps_var(i)
        p0, p1 = {}, {}
        for m, c in self.terms.items():
            d = dict(m)
            e = d.pop(v, 0)
            if e == 0:
                p0[m] = c
            elif e == 1:
                p1[tuple(sorted(d.items()))] = c
            else:
                return None
        return Poly(p0), Poly(p1)

    # -- substitution and evaluation
    def subs(self, values: Mapping[int, object]) -> "Poly":
        t: dict = {}
        for m, c in self.terms.items():
            coef = Fraction(c)
            rest = []
            for v, e in m:
                if v in values:
                    coef *= Fraction(values[v]) ** e
                else:
                    rest.append((v, e))
            if coef != 0:
                key = tuple(rest)
                t[key] = t.get(key, 0) + coef
        return Poly(t)

    def subs_eps(self, tau: Mapping[int, object]) -> "Poly":
        need = self.eps_indices()
        return self.subs({eps_var(i): tau[i] for i in need})

    def eval_exact(self, u: Iterable, tau: Mapping[int, object] | None = None) -> Fraction:
        u = [Fraction(x) for x in u]
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for v, e in m:
                term *= (u[v] if v >= 0 else Fraction(tau[-v])) ** e
            total += term
        return total

    def linear_coeffs(self, K: int) -> tuple[np.ndarray, float]:
        """(a, b) with self(u) = a . u + b; requires an eps-free linear polynomial."""
        a = np.zeros(K)
        b = 0.0
        for m, c in self.terms.items():
            if not m:
                b += float(c)
            elif len(m) == 1 and m[0][1] == 1 and m[0][0] >= 0:
                a[m[0][0]] += float(c)
            else:
                raise ValueError("polynomial is not linear in the atom variables")
        return a, b

    def compiled(self, K: int):
        """Float evaluator and gradient for an eps-free polynomial."""
        monos = list(self.terms.items())
        coef = np.array([float(c) for _, c in monos])
        E = np.zeros((len(monos), K))
        for r, (m, _) in enumerate(monos):
            for v, e in m:
                if v < 0:
                    raise ValueError("substitute tolerances before compiling")
                E[r, v] = e
        return _CompiledPoly(coef, E)

    def sort_key(self):
        return tuple(sorted((_mono_key(m), c) for m, c in self.terms.items()))

    def __repr__(self):
        return f"Poly({format_poly(self)})"


class _CompiledPoly:
    def __init__(self, coef, E):
        self.coef, self.E = coef, E

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if not len(self.coef):
            return 0.0
        return float(self.coef @ np.prod(np.power(u[None, :], self.E), axis=1))

    def grad(self, u):
        u = np.asarray(u, dtype=float)
        K = len(u)
        g = np.zeros(K)
        for c, e in zip(self.coef, self.E):
            for j in np.nonzero(e)[0]:
                e2 = e.copy()
                e2[j] -= 1
                g[j] += c * e[j] * np.prod(np.power(u, e2))
        return g


def _mono_key(m: Monomial):
    return (sum(e for _, e in m), tuple((v if v >= 0 else 10**6 - v, e) for v, e in m))


def _coerce(x) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, (int, Fraction)):
        return Poly.const(x)
    raise TypeError(f"cannot use {type(x).__name__} as a polynomial")


def var_name(v: int) -> str:
    return f"u{v + 1}" if v >= 0 else f"e{-v}"


def format_monomial(m: Monomial) -> str:
    parts = []
    for v, e in m:
        parts.append(var_name(v) if e == 1 else f"{var_name(v)}^{e}")
    return "*".join(parts)


def format_poly(p: Poly) -> str:
    from .parser import format_number
    if p.is_zero():
        return "0"
    out = []
    for m, c in sorted(p.terms.items(), key=lambda mc: _mono_key(mc[0])):
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if not m:
            body = format_number(a)
        elif a == 1:
            body = format_monomial(m)
        else:
            body = f"{format_number(a)}*{format_monomial(m)}"
        out.append((sign, body))
    s = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        s += f" {sign} {body}"
    return s
