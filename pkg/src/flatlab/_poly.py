"""Exact univariate polynomials over the rationals.

A polynomial is a tuple of ``Fraction`` coefficients in ascending degree,
with trailing zeros stripped; the zero polynomial is ``()``.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

Poly = tuple


def poly(coeffs) -> Poly:
    c = [Fraction(v) for v in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def degree(p: Poly) -> int:
    return len(p) - 1


def add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return poly((p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n))


def neg(p: Poly) -> Poly:
    return tuple(-c for c in p)


def sub(p: Poly, q: Poly) -> Poly:
    return add(p, neg(q))


def mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ()
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return poly(out)


def deriv(p: Poly, k: int = 1) -> Poly:
    for _ in range(k):
        p = poly(i * c for i, c in enumerate(p) if i > 0)
    return p


def evaluate(p: Poly, x):
    acc = Fraction(0) if isinstance(x, Fraction) else 0.0
    for c in reversed(p):
        acc = acc * x + (c if isinstance(x, Fraction) else float(c))
    return acc


def divmod_poly(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    out = [Fraction(0)] * max(len(p) - len(q) + 1, 0)
    lead = q[-1]
    while len(r) >= len(q) and r:
        k = len(r) - len(q)
        f = r[-1] / lead
        out[k] = f
        for i, c in enumerate(q):
            r[i + k] -= f * c
        r.pop()
        while r and r[-1] == 0:
            r.pop()
    return poly(out), poly(r)


def gcd(p: Poly, q: Poly) -> Poly:
    while q:
        p, q = q, divmod_poly(p, q)[1]
    return poly(c / p[-1] for c in p) if p else p


def squarefree(p: Poly) -> Poly:
    g = gcd(p, deriv(p))
    return divmod_poly(p, g)[0] if degree(g) > 0 else p


def det(matrix) -> Poly:
    """Determinant of a square matrix of polynomials by permutation expansion."""
    n = len(matrix)
    if n == 0:
        return poly([1])
    total: Poly = ()
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = poly([1])
        for row, col in enumerate(perm):
            term = mul(term, matrix[row][col])
            if not term:
                break
        total = add(total, neg(term) if inversions % 2 else term)
    return total


def sturm_sequence(p: Poly) -> list[Poly]:
    seq = [p, deriv(p)]
    while seq[-1]:
        r = divmod_poly(seq[-2], seq[-1])[1]
        if not r:
            break
        seq.append(neg(r))
    return seq


def _sign_changes(seq, x: Fraction) -> int:
    signs = [s for s in ((evaluate(p, x) > 0) - (evaluate(p, x) < 0) for p in seq) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def real_roots(p: Poly, lo, hi, width: float = 1e-13) -> list[float]:
    """All distinct real roots in ``[lo, hi]``, each located to within ``width``."""
    if not p:
        raise ValueError("the zero polynomial has every point as a root")
    lo, hi = Fraction(lo), Fraction(hi)
    if degree(p) == 0 or lo > hi:
        return []
    q = squarefree(p)
    seq = sturm_sequence(q)

    def count(a, b):  # roots in (a, b]
        return _sign_changes(seq, a) - _sign_changes(seq, b)

    roots = [lo] if evaluate(q, lo) == 0 else []
    stack = [(lo, hi)]
    found = []
    while stack:
        a, b = stack.pop()
        n = count(a, b)
        if n == 0:
            continue
        if n > 1:
            mid = (a + b) / 2
            stack += [(a, mid), (mid, b)]
            continue
        while b - a > width:
            mid = (a + b) / 2
            if evaluate(q, mid) == 0:
                a = b = mid
                break
            if count(a, mid):
                b = mid
            else:
                a = mid
        found.append(b if a == b or evaluate(q, b) == 0 else (a + b) / 2)
    return sorted(float(r) for r in roots + found)
