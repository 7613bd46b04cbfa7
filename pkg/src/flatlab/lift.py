"""Self-affine lift of a one-dimensional IFS to the moment curve.

If ``f(x) = lam x + t`` then the lower-triangular affine map ``F`` built by
:func:`lift` satisfies ``F(V(x)) = V(f(x))`` with ``V(x) = (x, x^2, ..., x^l)``,
so pushing a self-similar measure to the moment curve gives a self-affine one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BadWeights, DimMismatch, InvalidIFS, NonContraction, SizeOverflow
from .ifs import WEIGHT_TOL, WeightedIFS, iterate
from .measures import DiscreteMeasure


def _is_exact_array(a: np.ndarray) -> bool:
    return a.dtype == object


@dataclass(frozen=True, eq=False)
class AffineMapND:
    """``x -> A x + b``; ``A`` and ``b`` may be float or object arrays of ``Fraction``."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A)
        b = np.asarray(self.b)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
            raise DimMismatch(f"matrix {A.shape} and vector {b.shape} do not form an affine map")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    def __call__(self, x):
        return self.A.dot(np.asarray(x, dtype=self.A.dtype)) + self.b

    def spectral_norm(self) -> float:
        return float(np.linalg.norm(self.A.astype(float), 2))

    def to_float(self) -> "AffineMapND":
        return AffineMapND(self.A.astype(float), self.b.astype(float))


@dataclass(frozen=True, eq=False)
class AffineIFS:
    maps: tuple
    weights: tuple
    base_point: np.ndarray | None = None

    def __post_init__(self):
        maps = tuple(self.maps)
        weights = tuple(self.weights)
        if len(maps) < 1 or len(maps) != len(weights):
            raise InvalidIFS("need one weight per map and at least one map")
        if len({f.dim for f in maps}) != 1:
            raise DimMismatch("all maps must act on the same space")
        if any(w <= 0 for w in weights):
            raise BadWeights("weights must be strictly positive")
        if all(isinstance(w, Fraction) for w in weights):
            ok = sum(weights) == 1
        else:
            ok = abs(math.fsum(float(w) for w in weights) - 1) <= WEIGHT_TOL
        if not ok:
            raise BadWeights("weights must sum to 1")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    @property
    def n(self) -> int:
        return len(self.maps)

    def max_spectral_norm(self) -> float:
        return max(f.spectral_norm() for f in self.maps)

    def to_text(self) -> str:
        """One line per map: row-major ``A``, then ``b``, then the weight."""
        lines = [f"# dim {self.dim}"]
        for f, w in zip(self.maps, self.weights):
            vals = [*np.asarray(f.A, dtype=float).ravel().tolist(), *np.asarray(f.b, dtype=float).tolist(), float(w)]
            vals = [v + 0.0 for v in vals]
            lines.append(" ".join(format(v, ".17g") for v in vals))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AffineIFS":
        dim = None
        maps, weights = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["dim"]:
                    dim = int(parts[1])
                continue
            vals = [float(v) for v in line.split()]
            if dim is None:
                raise InvalidIFS("missing '# dim' header")
            if len(vals) != dim * dim + dim + 1:
                raise InvalidIFS(f"expected {dim * dim + dim + 1} values per map, got {len(vals)}")
            maps.append(AffineMapND(np.array(vals[:dim * dim]).reshape(dim, dim), np.array(vals[dim * dim:-1])))
            weights.append(vals[-1])
        return cls(tuple(maps), tuple(weights))


def moment_vector(x, ell: int):
    """``(x, x^2, ..., x^ell)``, as Fractions when ``x`` is one."""
    if isinstance(x, Fraction):
        return np.array([x**k for k in range(1, ell + 1)], dtype=object)
    x = float(x)
    return np.array([x**k for k in range(1, ell + 1)])


def _lift_map(lam, t, ell: int, exact: bool) -> AffineMapND:
    if exact:
        lam, t = Fraction(lam), Fraction(t)
        A = np.full((ell, ell), Fraction(0), dtype=object)
    else:
        lam, t = float(lam), float(t)
        A = np.zeros((ell, ell))
    s = t / lam
    for k in range(1, ell + 1):
        for j in range(1, k + 1):
            A[k - 1, j - 1] = lam**k * math.comb(k, j) * s ** (k - j)
    b = -A.dot(moment_vector(-s, ell))
    return AffineMapND(A, b)


def lift(ifs: WeightedIFS, ell: int, exact: bool | None = None) -> AffineIFS:
    """Lower-triangular affine maps conjugate to ``ifs`` on the moment curve ``V_ell``.

    ``exact`` defaults to whether the IFS is given in Fractions. Weights are
    carried over as the very same objects.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if exact is None:
        exact = ifs.is_exact
    maps = tuple(_lift_map(f.lam, f.t, ell, exact) for f in ifs.maps)
    x0 = ifs.maps[0].fixed_point
    base = moment_vector(Fraction(x0) if exact else float(x0), ell)
    return AffineIFS(maps, ifs.weights, base)


def verify_conjugacy(ifs: WeightedIFS, lifted: AffineIFS, xs) -> float | Fraction:
    """Largest ``|F_i(V(x)) - V(f_i(x))|`` over maps and samples.

    Exact (and then exactly zero) when the IFS, the lift and the samples are
    all rational; otherwise in double precision.
    """
    if lifted.n != ifs.n:
        raise DimMismatch(f"lift has {lifted.n} maps, IFS has {ifs.n}")
    ell = lifted.dim
    exact = ifs.is_exact and all(_is_exact_array(F.A) for F in lifted.maps) and all(
        isinstance(x, (Fraction, int)) for x in xs
    )
    worst = Fraction(0) if exact else 0.0
    for f, F in zip(ifs.maps, lifted.maps):
        if not exact:
            F = F.to_float()
        for x in xs:
            x = Fraction(x) if exact else float(x)
            lam, t = (f.lam, f.t) if exact else (float(f.lam), float(f.t))
            defect = F(moment_vector(x, ell)) - moment_vector(lam * x + t, ell)
            worst = max(worst, max(abs(v) for v in defect))
    return worst


def contraction_depth(max_ratio: float, ell: int) -> int:
    """Least ``m`` with ``max_ratio^m < 1 / (4^ell sqrt(ell))``."""
    bound = 1.0 / (4.0**ell * math.sqrt(ell))
    m = max(1, math.ceil(math.log(bound) / math.log(max_ratio)))
    while max_ratio ** (m - 1) < bound and m > 1:
        m -= 1
    while max_ratio**m >= bound:
        m += 1
    return m


def ensure_contracting(ifs: WeightedIFS, ell: int, max_maps: int = 1_000_000) -> tuple[int, AffineIFS]:
    """Lift a power of ``ifs`` whose lifted maps all have spectral norm below 1."""
    m = contraction_depth(float(ifs.max_ratio), ell)
    lifted = lift(iterate(ifs, m, max_maps=max_maps), ell, exact=False)
    norm = lifted.max_spectral_norm()
    if not norm < 1 - 1e-12:
        raise NonContraction(f"lifted system at depth {m} has spectral norm {norm!r}")
    return m, lifted


def discretize_affine(aifs: AffineIFS, depth: int, x0=None, max_atoms: int = 10**7) -> DiscreteMeasure:
    """Atoms ``F_w(v0)`` over all words of length ``depth``, in lexicographic order.

    ``x0`` is a point on the line lifted to ``V(x0)``; by default the lift's
    base point is used.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if aifs.n**depth > max_atoms:
        raise SizeOverflow(f"{aifs.n}^{depth} atoms exceed the budget {max_atoms}")
    ell = aifs.dim
    if x0 is not None:
        v0 = moment_vector(float(x0), ell)
    elif aifs.base_point is not None:
        v0 = np.asarray(aifs.base_point, dtype=float)
    else:
        v0 = np.zeros(ell)
    As = np.stack([np.asarray(F.A, dtype=float) for F in aifs.maps])
    bs = np.stack([np.asarray(F.b, dtype=float) for F in aifs.maps])
    p = np.array([float(w) for w in aifs.weights])
    pts, w = v0[None, :], np.ones(1)
    for _ in range(depth):
        # F_i applied to every deeper word keeps the first letter outermost
        pts = (np.einsum("ijk,nk->inj", As, pts) + bs[:, None, :]).reshape(-1, ell)
        w = (p[:, None] * w[None, :]).ravel()
    return DiscreteMeasure(pts, w)
