"""Finite atomic measures in R^d and the functionals evaluated on them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ._fit import ScalingFit, loglog_slope
from .errors import (
    AtomBudgetExceeded,
    DimMismatch,
    DomainViolation,
    GridBudgetExceeded,
    InsufficientScales,
    InvalidMeasure,
)
from .ifs import WeightedIFS, cut_set, level_arrays

MASS_TOL = 1e-9
DEFAULT_MAX_ATOMS = 10**7
DEFAULT_CELL_BUDGET = 2**26
FFT_NOISE = 1e-13


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted atoms ``points[i]`` with mass ``weights[i]``.

    ``points`` has shape ``(N, d)``; a 1-D array is read as ``d = 1``.
    """

    points: np.ndarray
    weights: np.ndarray
    sub_probability: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.array(self.weights, dtype=float).ravel()
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidMeasure(f"points must have shape (N, d), got {pts.shape}")
        if pts.shape[0] != w.shape[0]:
            raise InvalidMeasure(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if pts.shape[0] == 0:
            raise InvalidMeasure("a measure needs at least one atom")
        if not np.all(np.isfinite(pts)):
            raise InvalidMeasure("non-finite atom coordinate")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InvalidMeasure("weights must be finite and strictly positive")
        total = math.fsum(w.tolist())
        if self.sub_probability:
            if total > 1 + MASS_TOL:
                raise InvalidMeasure(f"total mass {total!r} exceeds 1")
        elif abs(total - 1) > MASS_TOL:
            raise InvalidMeasure(f"weights sum to {total!r}, expected 1")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.points.shape[0]

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights.tolist())

    def __len__(self) -> int:
        return self.n_atoms

    @classmethod
    def delta(cls, point) -> "DiscreteMeasure":
        p = np.atleast_1d(np.asarray(point, dtype=float))
        return cls(p[None, :], np.ones(1))

    def canonical(self) -> "DiscreteMeasure":
        """Atoms sorted lexicographically with bit-identical points merged."""
        pts, w = _merge_identical(self.points, self.weights)
        return DiscreteMeasure(pts, w, self.sub_probability)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["dim", "n_atoms"])
        wr.writerow([self.dim, self.n_atoms])
        for p, w in zip(self.points.tolist(), self.weights.tolist()):
            wr.writerow([format(v, ".17g") for v in (*p, w)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DiscreteMeasure":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if len(rows) < 2 or [c.strip() for c in rows[0]] != ["dim", "n_atoms"]:
            raise InvalidMeasure("expected header 'dim,n_atoms'")
        try:
            d, n = (int(c) for c in rows[1])
            body = np.array([[float(c) for c in r] for r in rows[2:]], dtype=float)
        except ValueError as exc:
            raise InvalidMeasure(f"malformed measure file: {exc}") from None
        if body.shape != (n, d + 1):
            raise InvalidMeasure(f"expected {n} rows of {d + 1} values, got shape {body.shape}")
        return cls(body[:, :d], body[:, d])


def _merge_identical(points: np.ndarray, weights: np.ndarray):
    pts = points + 0.0  # fold -0.0 into 0.0
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    w = np.bincount(inv.ravel(), weights=weights, minlength=len(uniq))
    return uniq, w


@dataclass(frozen=True)
class Hyperplane:
    """The set ``{x : <normal, x> = offset}`` with a Euclidean unit normal."""

    normal: tuple
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).ravel()
        if abs(np.linalg.norm(n) - 1) > 1e-12:
            raise ValueError("hyperplane normal must have unit Euclidean norm")
        object.__setattr__(self, "normal", tuple(n.tolist()))
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_normal(cls, normal, offset: float = 0.0) -> "Hyperplane":
        n = np.asarray(normal, dtype=float).ravel()
        s = np.linalg.norm(n)
        if s == 0:
            raise ValueError("zero normal")
        return cls(tuple((n / s).tolist()), offset / s)

    @classmethod
    def coordinate(cls, d: int, axis: int, value: float) -> "Hyperplane":
        n = np.zeros(d)
        n[axis] = 1.0
        return cls(tuple(n.tolist()), value)

    @classmethod
    def through(cls, points) -> "Hyperplane":
        """Hyperplane through ``d`` points in R^d (least-squares if degenerate)."""
        p = np.asarray(points, dtype=float)
        diffs = p[1:] - p[0]
        n = _null_normal(diffs, p.shape[1])
        return cls(tuple(n.tolist()), float(n @ p[0]))

    @property
    def dim(self) -> int:
        return len(self.normal)


def _null_normal(diffs: np.ndarray, d: int) -> np.ndarray:
    if diffs.size == 0:
        n = np.zeros(d)
        n[0] = 1.0
        return n
    _, _, vt = np.linalg.svd(diffs.reshape(-1, d))
    return vt[-1]


# --- construction -----------------------------------------------------------

def discretize(ifs: WeightedIFS, tau: float) -> DiscreteMeasure:
    """One atom at ``f_w(0)`` of mass ``p_w`` per cut-set word; no merging."""
    cs = cut_set(ifs, tau)
    return DiscreteMeasure(cs.translations[:, None], cs.weights)


def discretize_depth(ifs: WeightedIFS, depth: int) -> DiscreteMeasure:
    """Same construction using all words of a fixed length."""
    _, t, p = level_arrays(ifs, depth)
    return DiscreteMeasure(t[:, None], p)


def pushforward(mu: DiscreteMeasure, curve) -> DiscreteMeasure:
    if mu.dim != 1:
        raise DimMismatch(f"pushforward needs a 1-D measure, got dim {mu.dim}")
    x = mu.points[:, 0]
    lo, hi = curve.domain
    bad = np.flatnonzero((x < lo) | (x > hi))
    if bad.size:
        i = int(bad[0])
        raise DomainViolation(f"atom {i} at x={x[i]!r} lies outside the curve domain [{lo}, {hi}]")
    return DiscreteMeasure(curve.evaluate_many(x), mu.weights, mu.sub_probability)


# --- convolution ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Mass on the cells ``[k w, (k+1) w)`` of a uniform grid; ``origin`` is the index of ``mass[0, ...]``."""

    width: float
    origin: np.ndarray
    mass: np.ndarray

    @property
    def dim(self) -> int:
        return self.mass.ndim

    @property
    def total(self) -> float:
        return float(self.mass.sum(dtype=float))

    def nonzero(self):
        idx = np.argwhere(self.mass > 0)
        return idx + self.origin, self.mass[tuple(idx.T)]

    def to_measure(self) -> DiscreteMeasure:
        """Atoms at the lower-left corners of occupied cells."""
        keys, w = self.nonzero()
        total = w.sum()
        sub = total < 1 - MASS_TOL
        # fold round-off into the weights so the result is a probability measure
        if not sub:
            w = w / total
        return DiscreteMeasure(keys * self.width, w, sub_probability=sub)

    def pooled_level(self, level: int):
        """Masses of the dyadic cells of side ``2^-level``; needs ``width = 2^-L`` with ``L >= level``."""
        L = -math.log2(self.width)
        if L != round(L) or level > round(L):
            raise ValueError("pooling needs a dyadic grid at least as fine as the target level")
        shift = int(round(L)) - level
        arr = self.mass
        heads = []
        for ax in range(arr.ndim):
            ids = (self.origin[ax] + np.arange(arr.shape[ax], dtype=np.int64)) >> shift
            starts = np.concatenate(([0], np.flatnonzero(np.diff(ids)) + 1))
            arr = np.add.reduceat(arr, starts, axis=ax)
            heads.append(ids[starts])
        idx = np.argwhere(arr > 0)
        keys = np.stack([heads[a][idx[:, a]] for a in range(arr.ndim)], axis=1)
        return keys, arr[tuple(idx.T)]


def to_grid(m: DiscreteMeasure, width: float, cell_budget: int = DEFAULT_CELL_BUDGET) -> GridMeasure:
    """Snap each atom to the grid cell containing it (floor binning)."""
    if width <= 0:
        raise ValueError("grid width must be positive")
    idx = np.floor(m.points / width).astype(np.int64)
    origin = idx.min(axis=0)
    shape = tuple((idx.max(axis=0) - origin + 1).tolist())
    _check_cells(shape, cell_budget)
    flat = np.ravel_multi_index(tuple((idx - origin).T), shape)
    mass = np.bincount(flat, weights=m.weights, minlength=int(np.prod(shape))).reshape(shape)
    return GridMeasure(width, origin, mass)


def _check_cells(shape, cell_budget):
    cells = math.prod(shape)
    if cells > cell_budget:
        raise GridBudgetExceeded(f"grid of shape {shape} has {cells} cells, budget {cell_budget}")


def grid_convolve(a: GridMeasure, b: GridMeasure, cell_budget: int = DEFAULT_CELL_BUDGET) -> GridMeasure:
    if a.width != b.width or a.dim != b.dim:
        raise DimMismatch("grid measures must share width and dimension")
    shape = tuple(x + y - 1 for x, y in zip(a.mass.shape, b.mass.shape))
    _check_cells(shape, cell_budget)
    out = fftconvolve(a.mass, b.mass)
    out[out < FFT_NOISE * out.max()] = 0.0
    return GridMeasure(a.width, a.origin + b.origin, out)


def grid_power(g: GridMeasure, p: int, cell_budget: int = DEFAULT_CELL_BUDGET) -> GridMeasure:
    if p < 1:
        raise ValueError("power must be at least 1")
    out = g
    for _ in range(p - 1):
        out = grid_convolve(out, g, cell_budget)
    return out


def convolve(
    a: DiscreteMeasure,
    b: DiscreteMeasure,
    coalesce_width: float | None = None,
    max_atoms: int = DEFAULT_MAX_ATOMS,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> DiscreteMeasure:
    """Pushforward of ``a x b`` under addition.

    With ``coalesce_width`` unset, bit-identical sums are merged and nothing
    else. With a width, both factors are snapped to that grid first and the
    product is computed by FFT; atoms then sit at cell corners.
    """
    if a.dim != b.dim:
        raise DimMismatch(f"cannot convolve dims {a.dim} and {b.dim}")
    if coalesce_width:
        g = grid_convolve(to_grid(a, coalesce_width, cell_budget), to_grid(b, coalesce_width, cell_budget), cell_budget)
        return g.to_measure()
    pairs = a.n_atoms * b.n_atoms
    if pairs > max_atoms:
        raise AtomBudgetExceeded(f"{pairs} atom pairs exceed the budget {max_atoms}; enable grid coalescing")
    pts = (a.points[:, None, :] + b.points[None, :, :]).reshape(-1, a.dim)
    w = np.outer(a.weights, b.weights).ravel()
    pts, w = _merge_identical(pts, w)
    return DiscreteMeasure(pts, w, a.sub_probability or b.sub_probability)


def convolution_power(
    a: DiscreteMeasure,
    p: int,
    coalesce_width: float | None = None,
    max_atoms: int = DEFAULT_MAX_ATOMS,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> DiscreteMeasure:
    if p < 1:
        raise ValueError("power must be at least 1")
    if coalesce_width:
        return grid_power(to_grid(a, coalesce_width, cell_budget), p, cell_budget).to_measure()
    out = a
    for _ in range(p - 1):
        out = convolve(out, a, max_atoms=max_atoms)
    if p == 1:
        out = DiscreteMeasure(a.points.copy(), a.weights.copy(), a.sub_probability)
    return out


# --- ball and slab functionals -----------------------------------------------

def ball_mass(m: DiscreteMeasure, center, r: float) -> float:
    """Mass of the closed max-norm ball of radius ``r``."""
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (m.dim,):
        raise DimMismatch(f"center has shape {c.shape}, measure dim is {m.dim}")
    inside = np.max(np.abs(m.points - c), axis=1) <= r
    return math.fsum(m.weights[inside].tolist())


def max_ball_masses(m: DiscreteMeasure, radii, chunk: int = 256) -> np.ndarray:
    """``max_x m(B(x, r))`` over atom centers, for each radius."""
    radii = np.asarray(radii, dtype=float)
    if m.dim == 1:
        order = np.argsort(m.points[:, 0], kind="stable")
        xs = m.points[order, 0]
        cum = np.concatenate(([0.0], np.cumsum(m.weights[order])))
        out = []
        for r in radii:
            lo = np.searchsorted(xs, xs - r, side="left")
            hi = np.searchsorted(xs, xs + r, side="right")
            out.append(float(np.max(cum[hi] - cum[lo])))
        return np.array(out)
    best = np.zeros(len(radii))
    for s in range(0, m.n_atoms, chunk):
        dist = np.max(np.abs(m.points[s:s + chunk, None, :] - m.points[None, :, :]), axis=2)
        for k, r in enumerate(radii):
            best[k] = max(best[k], float(np.max((dist <= r) @ m.weights)))
    return best


def frostman_floor(tau: float, rho: float = 0.5) -> float:
    """Smallest radius a Frostman fit should use for a discretization at ``tau``."""
    return tau**rho


def frostman_fit(m: DiscreteMeasure, radii) -> ScalingFit:
    """Slope of ``log max_x m(B(x, r))`` against ``log r``."""
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise InsufficientScales(f"need at least 3 radii, got {len(radii)}")
    masses = max_ball_masses(m, radii)
    table = list(zip(radii, masses.tolist()))
    return ScalingFit(loglog_slope(radii, masses), table, ("r", "max_ball_mass"))


def slab_mass(m: DiscreteMeasure, w: Hyperplane, eps: float) -> float:
    """Mass of the open slab ``|<n, x> - c| < eps``."""
    if m.dim < 2:
        raise DimMismatch("slab masses need a measure of dimension at least 2")
    if w.dim != m.dim:
        raise DimMismatch(f"hyperplane in R^{w.dim}, measure in R^{m.dim}")
    inside = np.abs(m.points @ np.asarray(w.normal) - w.offset) < eps
    return math.fsum(m.weights[inside].tolist())


def _candidate_normals(m: DiscreteMeasure, trials: int, n_directions: int, max_pairs: int, rng) -> np.ndarray:
    d = m.dim
    cands = [rng.standard_normal((trials, d))]
    if d == 2 and n_directions > 0:
        ang = np.arange(n_directions) * (np.pi / n_directions)
        cands.append(np.stack([np.cos(ang), np.sin(ang)], axis=1))
    pts = m.points
    n = m.n_atoms
    if n >= d:
        # secants between neighbours approximate tangent directions, the worst case for curves
        order = np.argsort(pts[:, 0], kind="stable")
        tuples = [np.stack([order[i:n - d + 1 + i] for i in range(d)], axis=1)]
        k = max(0, max_pairs - len(tuples[0]))
        if k:
            tuples.append(rng.integers(0, n, size=(k, d)))
        tup = np.concatenate(tuples)
        diffs = pts[tup[:, 1:]] - pts[tup[:, :1]]
        if d == 2:
            v = diffs[:, 0, :]
            cands.append(np.stack([-v[:, 1], v[:, 0]], axis=1))
        else:
            _, _, vt = np.linalg.svd(diffs)
            cands.append(vt[:, -1, :])
    normals = np.concatenate(cands)
    norms = np.linalg.norm(normals, axis=1)
    normals = normals[norms > 0] / norms[norms > 0, None]
    return normals


def worst_slab_masses(m: DiscreteMeasure, eps_list, normals: np.ndarray, chunk: int = 512) -> np.ndarray:
    """For each eps, the largest open-slab mass over the given normals and all offsets.

    For a fixed normal the best offset is found exactly: a window of
    projections whose spread is below ``2 eps`` fits inside one open slab.
    """
    eps = np.asarray(eps_list, dtype=float)
    best = np.zeros(len(eps))
    for s in range(0, len(normals), chunk):
        proj = m.points @ normals[s:s + chunk].T
        order = np.argsort(proj, axis=0, kind="stable")
        sp = np.take_along_axis(proj, order, axis=0)
        cum = np.vstack([np.zeros((1, sp.shape[1])), np.cumsum(m.weights[order], axis=0)])
        for c in range(sp.shape[1]):
            col = sp[:, c]
            for k, e in enumerate(eps):
                j = np.searchsorted(col, col + 2 * e, side="left")
                mass = float(np.max(cum[j, c] - cum[:-1, c]))
                if mass > best[k]:
                    best[k] = mass
    return best


def nonconcentration_sweep(
    m: DiscreteMeasure,
    eps_list,
    trials: int = 256,
    seed: int = 0,
    n_directions: int = 2048,
    max_pairs: int = 4096,
) -> ScalingFit:
    """Heuristic lower bound for ``sup_W m(W(eps))`` and its fitted exponent.

    Candidates are random normals, a uniform angular grid in the plane and
    hyperplanes spanned by atom tuples; each is evaluated at its best offset.
    """
    if m.dim < 2:
        raise DimMismatch("non-concentration needs a measure of dimension at least 2")
    eps = [float(e) for e in eps_list]
    rng = np.random.default_rng(seed)
    normals = _candidate_normals(m, trials, n_directions, max_pairs, rng)
    worst = worst_slab_masses(m, eps, normals)
    table = list(zip(eps, worst.tolist()))
    beta = loglog_slope(eps, worst) if len(eps) >= 3 else float("nan")
    return ScalingFit(beta, table, ("eps", "worst_slab_mass"))
