"""Fourier transforms ``nu^(xi) = sum_j w_j e(<xi, x_j>)`` with ``e(x) = exp(2 pi i x)``."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._fit import ScalingFit, loglog_slope
from .errors import DimMismatch, GridBudgetExceeded, SizeOverflow, TauUnderflow
from .ifs import WeightedIFS, attractor_interval, cut_set
from .measures import DiscreteMeasure

TWO_PI = 2.0 * np.pi
DEFAULT_GRID_BUDGET = 10**9
_BLOCK_ELEMENTS = 1 << 22


def e(x):
    return np.exp(1j * TWO_PI * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Frequency:
    """``xi = (theta, zeta)``; ``zeta`` is empty on the line."""

    theta: float
    zeta: tuple = ()

    def __post_init__(self):
        z = tuple(float(v) for v in np.atleast_1d(np.asarray(self.zeta, dtype=float)))
        if not math.isfinite(self.theta) or not all(map(math.isfinite, z)):
            raise ValueError("frequency components must be finite")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "zeta", z)

    @property
    def dim(self) -> int:
        return 1 + len(self.zeta)

    def vector(self) -> np.ndarray:
        return np.array([self.theta, *self.zeta])


def _as_vector(xi, d: int) -> np.ndarray:
    v = xi.vector() if isinstance(xi, Frequency) else np.atleast_1d(np.asarray(xi, dtype=float))
    if v.shape != (d,):
        raise DimMismatch(f"frequency of dimension {v.shape[0]} for a measure in R^{d}")
    return v


def ft_discrete(m: DiscreteMeasure, xi) -> complex:
    v = _as_vector(xi, m.dim)
    return complex(e(m.points @ v) @ m.weights)


def ft_discrete_many(m: DiscreteMeasure, xis) -> np.ndarray:
    """``nu^`` at each row of ``xis`` (shape ``(K, d)``, or ``(K,)`` on the line)."""
    xs = np.asarray(xis, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    if xs.shape[1] != m.dim:
        raise DimMismatch(f"frequencies in R^{xs.shape[1]} for a measure in R^{m.dim}")
    out = np.empty(len(xs), dtype=complex)
    step = max(1, _BLOCK_ELEMENTS // m.n_atoms)
    for s in range(0, len(xs), step):
        out[s:s + step] = e(xs[s:s + step] @ m.points.T) @ m.weights
    return out


def ft_uniform_line(points, weights, start: float, step: float, count: int) -> np.ndarray:
    """``sum_j w_j e(theta_k x_j)`` on ``theta_k = start + k step``, ``k < count``.

    Writing ``k = a B + b`` turns the sum into one complex matrix product.
    """
    x = np.asarray(points, dtype=float).ravel()
    w = np.asarray(weights, dtype=float) * e(start * x)
    B = max(1, math.isqrt(count - 1) + 1) if count > 1 else 1
    A = -(-count // B)
    out = np.empty(A * B, dtype=complex)
    eb = e(np.outer(np.arange(B) * step, x)).T
    rows = max(1, _BLOCK_ELEMENTS // len(x))
    for s in range(0, A, rows):
        ea = e(np.outer(np.arange(s, min(A, s + rows)) * (B * step), x)) * w
        out[s * B:min(A, s + rows) * B] = (ea @ eb).ravel()
    return out[:count]


def ft_product_grid(m: DiscreteMeasure, axes) -> np.ndarray:
    """``nu^`` on the product of per-axis frequency arrays, shape ``(len(axes[0]), ...)``."""
    if len(axes) != m.dim:
        raise DimMismatch(f"{len(axes)} grid axes for a measure in R^{m.dim}")
    E = [e(np.outer(np.asarray(ax, dtype=float), m.points[:, a])) for a, ax in enumerate(axes)]
    w = m.weights
    if m.dim == 1:
        return E[0] @ w
    if m.dim == 2:
        return (E[0] * w) @ E[1].T
    out = np.empty(tuple(len(ax) for ax in axes), dtype=complex)
    for i in range(len(axes[0])):
        out[i] = ft_product_grid(_Weighted(m.points[:, 1:], w * E[0][i]), axes[1:])
    return out


class _Weighted:
    """Complex-weighted atoms, used internally to peel one grid axis at a time."""

    def __init__(self, points, weights):
        self.points = points
        self.weights = weights
        self.dim = points.shape[1]


# --- frequency regions -----------------------------------------------------

@dataclass(frozen=True)
class Ball:
    """``||xi||_inf <= R``."""

    R: float

    def __post_init__(self):
        if not self.R >= 1:
            raise ValueError("R must be at least 1")

    def contains(self, theta, zeta_norm):
        return (np.abs(theta) <= self.R) & (zeta_norm <= self.R)

    def box(self, d):
        return [(-self.R, self.R)] * d


@dataclass(frozen=True)
class CRegion:
    """``|theta|^eps < ||zeta|| <= R`` inside ``Ball(R)``."""

    R: float
    eps: float

    def __post_init__(self):
        _check_region(self.R, self.eps)

    def contains(self, theta, zeta_norm):
        th = np.abs(theta)
        return (th <= self.R) & (th**self.eps < zeta_norm) & (zeta_norm <= self.R)

    def box(self, d):
        return [(-self.R, self.R)] * d


@dataclass(frozen=True)
class ERegion:
    """``||zeta|| <= |theta|^eps <= R^eps``; ties with ``CRegion`` land here."""

    R: float
    eps: float

    def __post_init__(self):
        _check_region(self.R, self.eps)

    def contains(self, theta, zeta_norm):
        th = np.abs(theta)
        return (th <= self.R) & (zeta_norm <= th**self.eps)

    def box(self, d):
        z = self.R**self.eps
        return [(-self.R, self.R)] + [(-z, z)] * (d - 1)


@dataclass(frozen=True)
class Box:
    bounds: tuple

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if not b or any(not lo < hi for lo, hi in b):
            raise ValueError("box bounds must be nonempty intervals")
        object.__setattr__(self, "bounds", b)

    def contains_point(self, v):
        return all(lo <= x <= hi for x, (lo, hi) in zip(v, self.bounds))

    def box(self, d):
        if len(self.bounds) != d:
            raise DimMismatch(f"box in R^{len(self.bounds)} used in R^{d}")
        return list(self.bounds)


def _check_region(R, eps):
    if not R >= 1:
        raise ValueError("R must be at least 1")
    if not 0 < eps <= 1:
        raise ValueError("epsilon must lie in (0, 1]")


FrequencyRegion = Ball | CRegion | ERegion | Box


def _mask(region, d: int, theta, zeta_norm):
    if d == 1 and not isinstance(region, Ball):
        raise DimMismatch("C and E regions need d >= 2")
    return region.contains(theta, zeta_norm)


def region_contains(region, xi) -> bool:
    v = xi.vector() if isinstance(xi, Frequency) else np.atleast_1d(np.asarray(xi, dtype=float))
    if isinstance(region, Box):
        return region.contains_point(v)
    zn = float(np.max(np.abs(v[1:]))) if len(v) > 1 else 0.0
    return bool(_mask(region, len(v), v[0], zn))


# --- quadrature --------------------------------------------------------------

def default_step(m: DiscreteMeasure, p: float) -> float:
    """Largest power of two at most ``1/4`` and at most ``2 / (p diam)``."""
    diam = float(np.max(np.ptp(m.points, axis=0))) if m.n_atoms > 1 else 0.0
    h = min(0.25, 2.0 / (p * diam)) if diam > 0 else 0.25
    return 2.0 ** math.floor(math.log2(h))


def _axis_centers(lo, hi, h):
    n = int(math.ceil((hi - lo) / h - 1e-9))
    return lo + h / 2 + h * np.arange(n)


def lp_region_integrals(
    m: DiscreteMeasure,
    regions,
    p: float,
    h: float | None = None,
    budget: int = DEFAULT_GRID_BUDGET,
    threads: int = 1,
):
    """Midpoint-rule ``int_region |nu^|^p`` for several regions on one shared grid.

    The grid covers the union of the regions' bounding boxes with cells of
    side ``h``; a cell counts for a region when its centre lies in it.
    Returns ``[(estimate, cell_count), ...]`` in the order of ``regions``.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    d = m.dim
    regions = list(regions)
    if h is None:
        h = default_step(m, p)
    if not 0 < h <= 0.25:
        raise ValueError("grid step must lie in (0, 1/4]")
    boxes = [r.box(d) for r in regions]
    bounds = [(min(b[a][0] for b in boxes), max(b[a][1] for b in boxes)) for a in range(d)]
    axes = [_axis_centers(lo, hi, h) for lo, hi in bounds]
    cells = math.prod(len(ax) for ax in axes)
    if cells > budget:
        raise GridBudgetExceeded(f"{cells} grid cells exceed the budget {budget}; coarsen h or shrink R")
    theta = axes[0]
    # |nu^| is even, so a grid symmetric in theta needs only its upper half
    half = len(theta) % 2 == 0 and np.allclose(theta, -theta[::-1], rtol=0, atol=1e-12 * max(1.0, abs(theta[0])))
    if half:
        theta = theta[len(theta) // 2:]
    rest = axes[1:]
    if d > 1:
        zgrid = np.meshgrid(*rest, indexing="ij")
        znorm = np.max(np.abs(np.stack(zgrid)), axis=0)
    else:
        znorm = np.zeros(())
    row_cells = max(1, math.prod(len(ax) for ax in rest))
    rows = max(1, _BLOCK_ELEMENTS // max(row_cells, m.n_atoms))
    blocks = [theta[s:s + rows] for s in range(0, len(theta), rows)]

    def work(th):
        f = np.abs(ft_product_grid(m, [th, *rest])) ** p
        tshape = th.reshape((-1,) + (1,) * (d - 1))
        sums, counts = [], []
        for r in regions:
            if isinstance(r, Box):
                inside = np.ones(f.shape, dtype=bool)
                for a, (lo, hi) in enumerate(r.bounds):
                    ax = [th, *rest][a].reshape([-1 if i == a else 1 for i in range(d)])
                    inside &= (ax >= lo) & (ax <= hi)
            else:
                inside = np.broadcast_to(_mask(r, d, tshape, znorm[None] if d > 1 else znorm), f.shape)
            sums.append(float(np.sum(f, where=inside)))
            counts.append(int(np.count_nonzero(inside)))
        return sums, counts

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    factor = 2 if half else 1
    vol = h**d
    out = []
    for k in range(len(regions)):
        est = factor * vol * math.fsum(s[k] for s, _ in parts)
        cnt = factor * sum(c[k] for _, c in parts)
        out.append((est, cnt))
    return out


def lp_region_integral(m: DiscreteMeasure, region, p: float, h: float | None = None,
                       budget: int = DEFAULT_GRID_BUDGET, threads: int = 1) -> tuple[float, int]:
    return lp_region_integrals(m, [region], p, h, budget, threads)[0]


# --- self-similar transforms -----------------------------------------------

def _support_radius(ifs: WeightedIFS) -> float:
    a, b = attractor_interval(ifs)
    return max(abs(a), abs(b))


def required_tau(ifs: WeightedIFS, theta_max: float, tol: float) -> float:
    """Cut-set scale whose discretization is within ``tol`` of ``mu^`` for ``|theta| <= theta_max``.

    Each atom ``f_w(0)`` replaces ``f_w mu``, which moves ``mu^`` by at most
    ``2 pi |theta| |lambda_w| sup|x|``.
    """
    r = _support_radius(ifs)
    if theta_max == 0 or r == 0:
        return 0.5
    return min(0.5, tol / (TWO_PI * abs(theta_max) * r))


def _discretized(ifs, theta_max, tol, max_words):
    tau = required_tau(ifs, theta_max, tol)
    try:
        cs = cut_set(ifs, tau, max_words=max_words)
    except SizeOverflow as exc:
        raise TauUnderflow(f"tolerance {tol} at |theta| = {theta_max} needs tau = {tau:.3g}: {exc}") from None
    return cs.translations, cs.weights


def ft_selfsimilar(ifs: WeightedIFS, theta: float, tol: float = 1e-3, max_words: int = 4_000_000) -> complex:
    if not 0 < tol <= 0.1:
        raise ValueError("tol must lie in (0, 0.1]")
    if theta == 0:
        return 1.0 + 0.0j
    t, w = _discretized(ifs, abs(theta), tol, max_words)
    return complex(e(theta * t) @ w)


def selfsimilar_abs_scan(ifs: WeightedIFS, R: float, step: float, tol: float, max_words: int = 4_000_000):
    """``|mu^|`` at ``theta = k step`` for ``0 <= theta <= R``, with one common discretization."""
    t, w = _discretized(ifs, R, tol, max_words)
    count = int(math.floor(R / step + 1e-9)) + 1
    return np.abs(ft_uniform_line(t, w, 0.0, step, count))


def _mark_intervals(theta, values, threshold) -> int:
    hit = theta[values >= threshold]
    return int(np.unique(np.floor(hit)).size)


def superlevel_cover_count(ifs: WeightedIFS, R: float, delta: float, tol: float = 1e-2,
                           step: float = 0.25, max_words: int = 4_000_000) -> int:
    """Number of unit intervals ``[k, k+1)`` in ``[-R, R)`` meeting ``{|mu^| >= R^-delta}``."""
    if R < 2 or delta <= 0:
        raise ValueError("need R >= 2 and delta > 0")
    thr = R**-delta
    a = selfsimilar_abs_scan(ifs, R, step, min(tol, thr / 10), max_words)
    n = int(round(2 * R / step))
    k = np.arange(n) - n // 2
    theta = k * step
    return _mark_intervals(theta, a[np.abs(k)], thr)


def superlevel_cover_count_measure(m: DiscreteMeasure, R: float, delta: float, step: float = 0.25) -> int:
    """Same count for a discrete measure on the line, evaluated exactly."""
    if m.dim != 1:
        raise DimMismatch("superlevel scans are one-dimensional")
    if R < 2 or delta <= 0:
        raise ValueError("need R >= 2 and delta > 0")
    n = int(round(2 * R / step))
    theta = -R + step * np.arange(n)
    a = np.abs(ft_uniform_line(m.points[:, 0], m.weights, -R, step, n))
    return _mark_intervals(theta, a, R**-delta)


def pointwise_decay_fit(m: DiscreteMeasure, rays, R: float, per_octave: int = 64,
                        thetas=(0.0, 1.0)) -> ScalingFit:
    """Decay exponent of ``|nu^(theta, s u)|`` in ``s`` along each ray ``u``.

    Samples every dyadic block ``[2^k, 2^(k+1))`` of ``s`` densely, keeps the
    block maxima over ``theta``, and fits the non-increasing suffix envelope.
    Returns the smallest exponent over the rays; the table lists
    ``(ray, s, envelope)``.
    """
    if m.dim < 2:
        raise DimMismatch("pointwise decay needs d >= 2")
    K = int(math.floor(math.log2(R)))
    if K < 3:
        raise ValueError("R must be at least 8")
    best, table = math.inf, []
    for idx, u in enumerate(rays):
        u = np.asarray(u, dtype=float).ravel()
        if u.shape != (m.dim - 1,):
            raise DimMismatch(f"ray must have {m.dim - 1} components")
        u = u / np.max(np.abs(u))
        block_max = np.zeros(K)
        for k in range(K):
            s = 2.0**k * (1 + np.arange(per_octave) / per_octave)
            for th in thetas:
                xis = np.column_stack([np.full(len(s), th), s[:, None] * u[None, :]])
                block_max[k] = max(block_max[k], float(np.max(np.abs(ft_discrete_many(m, xis)))))
        env = np.maximum.accumulate(block_max[::-1])[::-1]
        scales = 2.0 ** np.arange(K)
        gamma = -loglog_slope(scales, np.maximum(env, 1e-300))
        best = min(best, gamma)
        table += [(idx, float(s), float(v)) for s, v in zip(scales, env)]
    return ScalingFit(best, table, ("ray", "s", "envelope"))
