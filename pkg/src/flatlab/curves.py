"""Polynomial curves ``x -> (x, g(x))`` and their non-degeneracy determinant."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _poly
from ._fit import loglog_slope
from .errors import DomainViolation, IdenticallyZero


@dataclass(frozen=True)
class CurveSpec:
    """A curve in R^d whose first coordinate is ``x`` and whose others are polynomials.

    ``components`` holds the ``d - 1`` polynomials of ``g`` as exact
    coefficient tuples in ascending degree. ``kind`` is ``"moment"`` for
    ``V_d(x) = (x, x^2, ..., x^d)`` and ``"graph"`` otherwise.
    """

    kind: str
    components: tuple
    domain: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("moment", "graph"):
            raise ValueError(f"unknown curve kind {self.kind!r}")
        comps = tuple(_poly.poly(c) for c in self.components)
        for c in comps:
            if not all(math.isfinite(float(v)) for v in c):
                raise ValueError("curve coefficients must be finite")
        lo, hi = (float(v) for v in self.domain)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ValueError(f"domain must be a nonempty closed interval, got {self.domain}")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "_float_coeffs", [np.array([float(v) for v in c] or [0.0]) for c in comps])

    @property
    def dim(self) -> int:
        return len(self.components) + 1

    def with_domain(self, lo: float, hi: float) -> "CurveSpec":
        return CurveSpec(self.kind, self.components, (lo, hi))

    def _check(self, x):
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise DomainViolation(f"x={x!r} lies outside the curve domain [{lo}, {hi}]")

    def evaluate(self, x):
        """``Q(x)``; exact when ``x`` is a ``Fraction``."""
        self._check(x)
        if isinstance(x, Fraction):
            return (x, *(_poly.evaluate(c, x) for c in self.components))
        x = float(x)
        return np.array([x, *(_poly.evaluate(c, x) for c in self.components)])

    def evaluate_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.empty((len(xs), self.dim))
        out[:, 0] = xs
        for k, c in enumerate(self._float_coeffs, start=1):
            acc = np.zeros_like(xs)
            for a in c[::-1]:
                acc = acc * xs + a
            out[:, k] = acc
        return out

    def derivative_matrix(self, x) -> np.ndarray:
        """Column ``k`` is ``Q^(k+1)(x)``, by exact differentiation."""
        self._check(x)
        d = self.dim
        exact = isinstance(x, Fraction)
        m = np.zeros((d, d), dtype=object if exact else float)
        m[0, 0] = 1
        for i, c in enumerate(self.components, start=1):
            for k in range(d):
                m[i, k] = _poly.evaluate(_poly.deriv(c, k + 1), x if exact else float(x))
        return m

    def nondegeneracy_det(self, x) -> float:
        """``det[Q'(x) ... Q^(d)(x)]``, equal to ``det G(x) = det[g''(x) ... g^(d)(x)]``."""
        if isinstance(x, Fraction):
            self._check(x)
            return _poly.evaluate(self.det_polynomial(), x)
        return float(np.linalg.det(self.derivative_matrix(x).astype(float)))

    def det_polynomial(self):
        """``det G`` as an exact polynomial."""
        d = self.dim
        g = [[_poly.deriv(c, k) for k in range(2, d + 1)] for c in self.components]
        return _poly.det(g)


def moment_curve(d: int, domain=(0.0, 1.0)) -> CurveSpec:
    if d < 1:
        raise ValueError("moment curve dimension must be at least 1")
    comps = tuple(tuple([0] * k + [1]) for k in range(2, d + 1))
    return CurveSpec("moment", comps, domain)


def graph_curve(components, domain=(0.0, 1.0)) -> CurveSpec:
    return CurveSpec("graph", tuple(tuple(c) for c in components), domain)


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, pairwise disjoint closed intervals."""

    intervals: tuple = ()

    def __post_init__(self):
        iv = tuple((float(a), float(b)) for a, b in self.intervals)
        for (a, b), (c, _) in zip(iv, iv[1:]):
            if not a <= b < c:
                raise ValueError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", iv)

    @classmethod
    def covering(cls, pieces) -> "IntervalUnion":
        """Union of possibly overlapping closed intervals."""
        merged: list[list[float]] = []
        for a, b in sorted(pieces):
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return cls(tuple(map(tuple, merged)))

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (x >= a) & (x <= b)
        return out

    def complement_in(self, lo: float, hi: float) -> list[tuple[float, float]]:
        """Closures of the pieces of ``[lo, hi]`` outside the union."""
        out, cur = [], lo
        for a, b in self.intervals:
            if a > cur:
                out.append((cur, min(a, hi)))
            cur = max(cur, b)
            if cur >= hi:
                break
        if cur < hi:
            out.append((cur, hi))
        return [(a, b) for a, b in out if a < b]


@dataclass(frozen=True)
class GoodSet:
    exceptional: IntervalUnion
    roots: tuple
    min_abs_det: float
    c1: float
    c1_table: tuple


def _min_abs_on(p, a: float, b: float) -> float:
    crit = _poly.real_roots(_poly.deriv(p), a, b) if _poly.degree(p) > 1 else []
    return min(abs(_poly.evaluate(p, float(x))) for x in (a, b, *crit))


def _exceptional(roots, delta, lo, hi) -> IntervalUnion:
    pieces = [(max(lo, r - delta), min(hi, r + delta)) for r in roots]
    return IntervalUnion.covering(pieces)


def _min_off(p, e: IntervalUnion, lo, hi) -> float:
    pieces = e.complement_in(lo, hi)
    return min((_min_abs_on(p, a, b) for a, b in pieces), default=float("nan"))


def good_set_complement(curve: CurveSpec, delta: float, fit_deltas=None) -> GoodSet:
    """Closed ``delta``-neighbourhood of the zeros of ``det G`` in the domain.

    Also reports ``min |det G|`` off that set and an exponent ``c1`` fitted
    from ``min |det G|`` across several ``delta``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    p = curve.det_polynomial()
    if not p:
        raise IdenticallyZero("det G vanishes identically; the curve lies in a hyperplane")
    lo, hi = curve.domain
    roots = tuple(_poly.real_roots(p, Fraction(lo), Fraction(hi)))
    e = _exceptional(roots, delta, lo, hi)
    min_d = _min_off(p, e, lo, hi)
    if fit_deltas is None:
        fit_deltas = [2.0**-k for k in range(3, 9)]
    table = []
    for dl in fit_deltas:
        m = _min_off(p, _exceptional(roots, dl, lo, hi), lo, hi)
        if m == m and m > 0:
            table.append((dl, m))
    if not roots:
        c1 = 0.0
    elif len(table) >= 3:
        c1 = loglog_slope([t[0] for t in table], [t[1] for t in table])
    else:
        c1 = float("nan")
    return GoodSet(e, roots, min_d, c1, tuple(table))
