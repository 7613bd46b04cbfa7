"""Dyadic moment sums, L^q dimensions and convolution-power diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, GridBudgetExceeded, LevelOutOfRange
from .ifs import WeightedIFS
from .measures import (
    DEFAULT_CELL_BUDGET,
    DEFAULT_MAX_ATOMS,
    DiscreteMeasure,
    GridMeasure,
    convolution_power,
    convolve,
    discretize,
    grid_convolve,
    pushforward,
    to_grid,
)
from .spectral import Ball, lp_region_integral

MAX_LEVEL = 40


@dataclass(frozen=True, eq=False)
class DyadicHistogram:
    """Masses of the occupied cells ``2^-level (k + [0, 1)^d)``."""

    level: int
    keys: np.ndarray
    masses: np.ndarray

    @property
    def dim(self) -> int:
        return self.keys.shape[1]

    @property
    def cells(self) -> dict:
        return {tuple(k): float(v) for k, v in zip(self.keys.tolist(), self.masses.tolist())}

    @property
    def total(self) -> float:
        return math.fsum(self.masses.tolist())

    def __len__(self) -> int:
        return len(self.masses)


def _check_level(level: int):
    if not (isinstance(level, (int, np.integer)) and 0 <= level <= MAX_LEVEL):
        raise LevelOutOfRange(f"level must be an integer in [0, {MAX_LEVEL}], got {level!r}")


def bin(m: DiscreteMeasure, level: int) -> DyadicHistogram:  # noqa: A001 - domain name
    """Assign each atom to the half-open dyadic cell containing it."""
    _check_level(level)
    idx = np.floor(np.ldexp(m.points, level)).astype(np.int64)
    keys, inv = np.unique(idx, axis=0, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=m.weights, minlength=len(keys))
    return DyadicHistogram(level, keys, mass)


def bin_grid(g: GridMeasure, level: int, factors: int = 1) -> DyadicHistogram:
    """Histogram of a dyadic grid measure built from ``factors`` snapped summands.

    A sum of ``factors`` atoms snapped down to cell corners lies within
    ``factors`` cells above its snapped position, so each grid cell is
    binned by the midpoint of that range.
    """
    _check_level(level)
    L = -math.log2(g.width)
    if L != round(L) or level > round(L):
        raise LevelOutOfRange(f"grid of width {g.width} cannot be binned at level {level}")
    # (2k + factors) >> (shift + 1) equals (k + factors // 2) >> shift
    shifted = GridMeasure(g.width, g.origin + factors // 2, g.mass)
    keys, mass = shifted.pooled_level(level)
    return DyadicHistogram(level, keys, mass)


def moment_sum(h: DyadicHistogram, q: float) -> float:
    """``sum_Q nu(Q)^q``, or the largest cell mass for ``q = inf``."""
    if q == math.inf:
        return float(h.masses.max())
    if not q > 1:
        raise ValueError("q must exceed 1")
    return math.fsum((h.masses**q).tolist())


@dataclass(frozen=True)
class MeasureRecipe:
    """``(Q mu_tau)^{*power}``; ``curve=None`` keeps the measure on the line."""

    ifs: WeightedIFS
    curve: object = None
    power: int = 1
    coalesce_width: float | None = None

    def base(self, tau: float) -> DiscreteMeasure:
        mu = discretize(self.ifs, tau)
        return pushforward(mu, self.curve) if self.curve is not None else mu


@dataclass(frozen=True)
class LqDimension:
    q: float
    tau_q: float
    dim: float
    table: list = field(default_factory=list)
    coalesce_width: float | None = None


def _histograms(source, levels, tau, cell_budget, max_atoms):
    if isinstance(source, DiscreteMeasure):
        return [bin(source, m) for m in levels], None
    base = source.base(tau)
    if source.power == 1:
        return [bin(base, m) for m in levels], None
    if not source.coalesce_width:
        nu = convolution_power(base, source.power, max_atoms=max_atoms)
        return [bin(nu, m) for m in levels], None
    g = to_grid(base, source.coalesce_width, cell_budget)
    acc = g
    for _ in range(source.power - 1):
        acc = grid_convolve(acc, g, cell_budget)
    return [bin_grid(acc, m, source.power) for m in levels], source.coalesce_width


def _dimension_from_sums(q, levels, sums):
    y = [-math.log2(s) for s in sums]
    slope = float(np.polyfit(levels, y, 1)[0])
    table = []
    for i, (m, s) in enumerate(zip(levels, sums)):
        diff = y[i] - y[i - 1] if i else float("nan")
        table.append((m, s, y[i], diff))
    dim = slope if q == math.inf else slope / (q - 1)
    return slope, dim, table


def lq_dimension(source, q: float, m_range, tau: float | None = None,
                 cell_budget: int = DEFAULT_CELL_BUDGET, max_atoms: int = DEFAULT_MAX_ATOMS) -> LqDimension:
    """Least-squares slope of ``-log2 s_m`` over ``m``, divided by ``q - 1``.

    ``source`` is a measure or a :class:`MeasureRecipe`; recipes are
    discretized at ``tau``, by default ``2^-(max m + 4)``. The table holds
    ``(m, s_m, -log2 s_m, finite difference)`` so oscillation stays visible.
    """
    levels = list(m_range)
    if len(levels) < 4:
        raise ValueError("need at least 4 levels")
    if tau is None:
        tau = 2.0 ** -(max(levels) + 4)
    hists, width = _histograms(source, levels, tau, cell_budget, max_atoms)
    sums = [moment_sum(h, q) for h in hists]
    slope, dim, table = _dimension_from_sums(q, levels, sums)
    return LqDimension(q, slope, dim, table, width)


@dataclass(frozen=True)
class FlatteningReport:
    rows: list
    dims: dict
    coalesce_width: float | None
    tau: float
    epsilon: float
    columns: tuple = ("p", "m", "s_m", "normalized", "dim2_fit")


def coalesce_width_for(points, p_max: int, max_level: int,
                       cell_budget: int = DEFAULT_CELL_BUDGET, max_refine: int = 6) -> float:
    """Finest dyadic width ``2^-(max_level + r)``, ``r <= max_refine``, whose ``p_max``-fold grid fits the budget."""
    pts = np.asarray(points, dtype=float)
    for r in range(max_refine, -1, -1):
        L = max_level + r
        idx = np.floor(np.ldexp(pts, L))
        side = idx.max(axis=0) - idx.min(axis=0)
        if math.prod(int(p_max * s + 1) for s in side) <= cell_budget:
            return 2.0**-L
    raise GridBudgetExceeded(
        f"no grid at level >= {max_level} holds the {p_max}-fold power within {cell_budget} cells"
    )


def flattening_report(
    ifs: WeightedIFS,
    curve,
    p_max: int,
    m_range,
    epsilon: float = 0.0,
    tau: float | None = None,
    grid_coalesce: bool = True,
    coalesce_width: float | None = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
    max_atoms: int = DEFAULT_MAX_ATOMS,
) -> FlatteningReport:
    """``dim_2(nu^{*p})`` and ``s_m(nu^{*p}, 2) 2^{m(d - epsilon)}`` for ``p = 1 .. p_max``."""
    levels = list(m_range)
    if len(levels) < 4:
        raise ValueError("need at least 4 levels")
    if tau is None:
        tau = 2.0 ** -(max(levels) + 4)
    mu = discretize(ifs, tau)
    nu = pushforward(mu, curve) if curve is not None else mu
    d = nu.dim
    width = None
    if grid_coalesce and p_max > 1:
        if coalesce_width is None:
            coalesce_width = coalesce_width_for(nu.points, p_max, max(levels), cell_budget)
        width = coalesce_width
        g = to_grid(nu, width, cell_budget)
    rows, dims = [], {}
    acc = None
    for p in range(1, p_max + 1):
        if p == 1:
            hists = [bin(nu, m) for m in levels]
        elif width:
            acc = g if acc is None else acc
            acc = grid_convolve(acc, g, cell_budget)
            hists = [bin_grid(acc, m, p) for m in levels]
        else:
            acc = nu if acc is None else acc
            acc = convolve(acc, nu, max_atoms=max_atoms)
            hists = [bin(acc, m) for m in levels]
        sums = [moment_sum(h, 2) for h in hists]
        _, dim, _ = _dimension_from_sums(2, levels, sums)
        dims[p] = dim
        for m, s in zip(levels, sums):
            rows.append((p, m, s, s * 2.0 ** (m * (d - epsilon)), dim))
    return FlatteningReport(rows, dims, width, tau, epsilon)


@dataclass(frozen=True)
class ImprovingCheck:
    ratio: float
    gate: float
    s_theta: float
    s_conv: float


def l2_improving_check(theta: DiscreteMeasure, nu: DiscreteMeasure, m: int, gamma: float = 0.0,
                       coalesce_width: float | None = None) -> ImprovingCheck:
    """``s_m(theta * nu, 2) / s_m(theta, 2)`` and the gate ``s_m(theta, 2) 2^{m(d - gamma)}``."""
    if theta.dim != nu.dim:
        raise DimMismatch(f"dims {theta.dim} and {nu.dim} differ")
    s_theta = moment_sum(bin(theta, m), 2)
    s_conv = moment_sum(bin(convolve(theta, nu, coalesce_width=coalesce_width), m), 2)
    return ImprovingCheck(s_conv / s_theta, s_theta * 2.0 ** (m * (theta.dim - gamma)), s_theta, s_conv)


@dataclass(frozen=True)
class Consistency:
    level: int
    ratio: float
    s_m: float
    integral: float
    cells: int
    h: float | None


def fourier_moment_consistency(m: DiscreteMeasure, level: int, h: float | None = None,
                               threads: int = 1) -> Consistency:
    """``s_level(nu, 2) / (2^{-d level} int_{Ball(2^level)} |nu^|^2)``."""
    if not 0 <= level <= 12:
        raise LevelOutOfRange("consistency levels must lie in [0, 12]")
    s = moment_sum(bin(m, level), 2)
    integral, cells = lp_region_integral(m, Ball(2.0**level), 2, h=h, threads=threads)
    return Consistency(level, s / (2.0 ** (-m.dim * level) * integral), s, integral, cells, h)

