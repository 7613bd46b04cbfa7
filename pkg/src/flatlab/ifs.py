"""Weighted self-similar iterated function systems on the line.

An IFS is a finite list of contractions ``f_i(x) = lam_i * x + t_i`` paired
with a strictly positive probability vector.  Words are tuples of map
indices and ``f_w = f_{w[0]} o f_{w[1]} o ...``.

Map parameters may be floats or :class:`fractions.Fraction`; the exact type
is preserved by :func:`compose` and :func:`iterate` so that verification code
can run in rational arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BadWeights, DegenerateIFS, NonContraction, SizeOverflow, TauOutOfRange

WEIGHT_TOL = 1e-12
CUT_WEIGHT_TOL = 1e-10

Word = tuple  # tuple[int, ...]


@dataclass(frozen=True)
class AffineMap1D:
    lam: Real
    t: Real

    def __call__(self, x):
        return self.lam * x + self.t

    @property
    def fixed_point(self):
        return self.t / (1 - self.lam)

    def then(self, inner: "AffineMap1D") -> "AffineMap1D":
        """Return ``self o inner``."""
        return AffineMap1D(self.lam * inner.lam, self.lam * inner.t + self.t)


@dataclass(frozen=True)
class WeightedIFS:
    maps: tuple
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "weights", tuple(self.weights))
        validate(self)

    @classmethod
    def from_triples(cls, triples: Iterable[Sequence[Real]]) -> "WeightedIFS":
        triples = list(triples)
        return cls([AffineMap1D(lam, t) for lam, t, _ in triples], [w for _, _, w in triples])

    @classmethod
    def from_maps(cls, pairs: Iterable[Sequence[Real]], weights: Sequence[Real] | None = None):
        maps = [AffineMap1D(lam, t) for lam, t in pairs]
        if weights is None:
            weights = [1 / len(maps)] * len(maps)
        return cls(maps, weights)

    @property
    def n(self) -> int:
        return len(self.maps)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([float(f.lam) for f in self.maps])

    @property
    def translations(self) -> np.ndarray:
        return np.array([float(f.t) for f in self.maps])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([float(p) for p in self.weights])

    @property
    def max_ratio(self) -> float:
        return float(np.max(np.abs(self.ratios)))

    @property
    def min_ratio(self) -> float:
        return float(np.min(np.abs(self.ratios)))

    @property
    def is_exact(self) -> bool:
        vals = [f.lam for f in self.maps] + [f.t for f in self.maps] + list(self.weights)
        return all(isinstance(v, (int, Fraction)) for v in vals)

    def to_text(self) -> str:
        lines = ["# lambda t weight"]
        for f, w in zip(self.maps, self.weights):
            lines.append(" ".join(format(float(v), ".17g") for v in (f.lam, f.t, w)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WeightedIFS":
        triples = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                triples.append([float(tok) for tok in line.replace(",", " ").split()])
        return cls.from_triples(triples)


def validate(ifs: WeightedIFS) -> None:
    """Raise unless ``ifs`` satisfies the standing assumptions.

    Checks strict contraction of every map, a strictly positive normalized
    weight vector, and that at least two maps have distinct fixed points.
    """
    if len(ifs.maps) < 2:
        raise DegenerateIFS("an IFS needs at least two maps")
    if len(ifs.weights) != len(ifs.maps):
        raise BadWeights(f"{len(ifs.weights)} weights for {len(ifs.maps)} maps")
    for i, f in enumerate(ifs.maps):
        if not (0 < abs(f.lam) < 1):
            raise NonContraction(f"map {i} has ratio {f.lam}; need 0 < |lambda| < 1")
    for i, w in enumerate(ifs.weights):
        if not w > 0:
            raise BadWeights(f"weight {i} is {w}; weights must be strictly positive")
    if all(isinstance(w, (int, Fraction)) for w in ifs.weights):
        total_dev = abs(sum(ifs.weights) - 1)
    else:
        total_dev = abs(math.fsum(float(w) for w in ifs.weights) - 1.0)
    if total_dev > WEIGHT_TOL:
        raise BadWeights(f"weights sum to 1{total_dev:+.3g}, not 1")
    if not _has_distinct_fixed_points(ifs.maps):
        raise DegenerateIFS("all maps share one fixed point; the attractor is a single point")


def _has_distinct_fixed_points(maps) -> bool:
    fps = np.array([float(f.t) / (1.0 - float(f.lam)) for f in maps])
    scale = 1.0 + float(np.max(np.abs(fps)))
    if np.ptp(fps) > 1e-12 * scale:
        return True
    # near-ties are settled in exact arithmetic (floats are exact rationals)
    exact = {Fraction(f.t) / (1 - Fraction(f.lam)) for f in maps}
    return len(exact) > 1


def compose(ifs: WeightedIFS, word: Sequence[int]) -> tuple[AffineMap1D, Real]:
    """Return ``(f_w, p_w)`` for a word; the empty word gives the identity and weight 1."""
    f = AffineMap1D(1, 0)
    p = 1
    for letter in word:
        if not 0 <= letter < ifs.n:
            raise IndexError(f"letter {letter} out of range for {ifs.n} maps")
        f = f.then(ifs.maps[letter])
        p = p * ifs.weights[letter]
    return f, p


@dataclass(frozen=True)
class CutSet:
    """Words of a cut-set in lexicographic order, with cached ratio, f_w(0) and weight."""

    tau: float
    letters: np.ndarray = field(repr=False)  # (k, max_len), padded with -1
    lengths: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    translations: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.lengths)

    def __getitem__(self, i: int) -> Word:
        return tuple(int(c) for c in self.letters[i, : self.lengths[i]])

    def __iter__(self) -> Iterator[Word]:
        for i in range(len(self)):
            yield self[i]

    @property
    def words(self) -> list:
        return list(self)

    def total_weight(self) -> float:
        return math.fsum(self.weights)


def cut_set(ifs: WeightedIFS, tau: float, max_words: int = 20_000_000) -> CutSet:
    """Expand the stopping set of words whose ratio first drops below ``tau``.

    A word ``w`` is kept when ``|lam_w| < tau`` while its parent prefix has
    ratio ``>= tau``.  Prefixes are expanded breadth first (vectorized) and the
    result is sorted lexicographically, which is the order a depth-first
    expansion in letter order would produce.
    """
    if not 0 < tau < 1:
        raise TauOutOfRange(f"tau={tau} not in (0, 1)")
    lam = ifs.ratios
    t = ifs.translations
    p = ifs.probabilities
    n = ifs.n

    act_r = np.ones(1)
    act_t = np.zeros(1)
    act_p = np.ones(1)
    act_w = np.zeros((1, 0), dtype=np.int32)
    done = []
    total = 0
    while len(act_r):
        r = (act_r[:, None] * lam[None, :]).ravel()
        tt = (act_t[:, None] + act_r[:, None] * t[None, :]).ravel()
        pp = (act_p[:, None] * p[None, :]).ravel()
        ww = np.concatenate(
            [np.repeat(act_w, n, axis=0), np.tile(np.arange(n, dtype=np.int32), len(act_r))[:, None]],
            axis=1,
        )
        fin = np.abs(r) < tau
        total += int(fin.sum())
        if total + int((~fin).sum()) * n > max_words:
            raise SizeOverflow(f"cut-set at tau={tau:g} exceeds {max_words} words")
        if fin.any():
            done.append((ww[fin], r[fin], tt[fin], pp[fin]))
        keep = ~fin
        act_r, act_t, act_p, act_w = r[keep], tt[keep], pp[keep], ww[keep]

    depth = max(w.shape[1] for w, *_ in done)
    letters = np.concatenate(
        [np.pad(w, ((0, 0), (0, depth - w.shape[1])), constant_values=-1) for w, *_ in done]
    )
    lengths = np.concatenate([np.full(len(w), w.shape[1]) for w, *_ in done])
    ratios = np.concatenate([d[1] for d in done])
    trans = np.concatenate([d[2] for d in done])
    weights = np.concatenate([d[3] for d in done])
    order = np.lexsort(letters.T[::-1])
    return CutSet(
        tau=tau,
        letters=letters[order],
        lengths=lengths[order],
        ratios=ratios[order],
        translations=trans[order],
        weights=weights[order],
    )


def _ratio_groups(ifs: WeightedIFS) -> tuple[list, np.ndarray]:
    """Distinct ratio values (in first-seen order) and the group of each letter."""
    values: list = []
    group = np.empty(ifs.n, dtype=int)
    for i, f in enumerate(ifs.maps):
        if f.lam not in values:
            values.append(f.lam)
        group[i] = values.index(f.lam)
    return values, group


def _signature_ratio(values: list, counts: Sequence[int]):
    r = 1
    for v, c in zip(values, counts):
        for _ in range(c):
            r = r * v
    return r


def contraction_ratio_set(words: Iterable[Sequence[int]], ifs: WeightedIFS) -> frozenset:
    """Distinct contraction ratios of ``words``.

    The ratio of a word depends only on how often each ratio value occurs in
    it, so words are keyed on that count vector and each key is evaluated
    once in a canonical order.  No floating point comparison is involved.
    """
    values, group = _ratio_groups(ifs)
    sigs = set()
    for w in words:
        counts = [0] * len(values)
        for letter in w:
            counts[group[letter]] += 1
        sigs.add(tuple(counts))
    return frozenset(_signature_ratio(values, s) for s in sigs)


def contraction_ratios(ifs: WeightedIFS, tau: float) -> frozenset:
    """The ratio set of the cut-set at ``tau`` without enumerating its words.

    Enumerates count vectors ``c`` whose product is still ``>= tau``; every
    one-letter extension that falls below ``tau`` is a cut-set ratio.  The
    number of such vectors grows polynomially in ``-log tau``.
    """
    if not 0 < tau < 1:
        raise TauOutOfRange(f"tau={tau} not in (0, 1)")
    values, _ = _ratio_groups(ifs)
    mags = [abs(float(v)) for v in values]
    k = len(values)
    out = set()

    def walk(counts: list, start: int, mag: float):
        # mag >= tau here: counts is a valid prefix signature
        for g in range(k):
            if mag * mags[g] < tau:
                c = counts.copy()
                c[g] += 1
                out.add(tuple(c))
        # nondecreasing group index avoids revisiting the same vector
        for g in range(start, k):
            nxt = mag * mags[g]
            if nxt >= tau:
                counts[g] += 1
                walk(counts, g, nxt)
                counts[g] -= 1

    walk([0] * k, 0, 1.0)
    return frozenset(_signature_ratio(values, s) for s in out)


def iterate(ifs: WeightedIFS, m: int, max_maps: int = 1_000_000) -> WeightedIFS:
    """The IFS of all ``n**m`` length-``m`` compositions, in lexicographic word order."""
    if m < 1:
        raise ValueError(f"m={m} must be >= 1")
    if ifs.n ** m > max_maps:
        raise SizeOverflow(f"{ifs.n}**{m} = {ifs.n ** m} maps exceeds the cap {max_maps}")
    if m == 1:
        return ifs
    if ifs.is_exact:
        maps, weights = [], []
        for word in itertools.product(range(ifs.n), repeat=m):
            f, p = compose(ifs, word)
            maps.append(f)
            weights.append(p)
        return WeightedIFS(maps, weights)
    r, tt, pp = level_arrays(ifs, m)
    return WeightedIFS([AffineMap1D(a, b) for a, b in zip(r.tolist(), tt.tolist())], pp.tolist())


def level_arrays(ifs: WeightedIFS, depth: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ratios, ``f_w(0)`` and weights of all words of length ``depth``, lexicographic."""
    lam, t, p = ifs.ratios, ifs.translations, ifs.probabilities
    r, tt, pp = np.ones(1), np.zeros(1), np.ones(1)
    for _ in range(depth):
        tt = (tt[:, None] + r[:, None] * t[None, :]).ravel()
        r = (r[:, None] * lam[None, :]).ravel()
        pp = (pp[:, None] * p[None, :]).ravel()
    return r, tt, pp


def attractor_interval(ifs: WeightedIFS, max_iter: int = 2000) -> tuple[float, float]:
    """A closed interval mapped into itself by every map of ``ifs``."""
    lam, t = ifs.ratios, ifs.translations
    fps = t / (1.0 - lam)
    a, b = float(fps.min()), float(fps.max())

    def hull(a, b):
        ends = np.concatenate([lam * a + t, lam * b + t])
        return min(a, float(ends.min())), max(b, float(ends.max()))

    for _ in range(max_iter):
        na, nb = hull(a, b)
        if na == a and nb == b:
            return a, b
        a, b = na, nb
    # not yet stable: inflate by the remaining overshoot scaled by 1/(1 - max|lam|)
    na, nb = hull(a, b)
    s = max(a - na, nb - b) / (1.0 - float(np.max(np.abs(lam))))
    a, b = a - s, b + s
    while True:
        na, nb = hull(a, b)
        if na >= a and nb <= b:
            return a, b
        s = 2 * max(a - na, nb - b, abs(b - a) * 1e-15)
        a, b = a - s, b + s


def dyadic(weights: Sequence[float] = (0.5, 0.5)) -> WeightedIFS:
    """``x/2, x/2 + 1/2``; with equal weights the measure is Lebesgue on [0, 1]."""
    return WeightedIFS([AffineMap1D(0.5, 0.0), AffineMap1D(0.5, 0.5)], weights)


def middle_thirds(weights: Sequence[float] = (0.5, 0.5)) -> WeightedIFS:
    """``x/3, x/3 + 2/3``; equal weights give the natural Cantor measure."""
    return WeightedIFS([AffineMap1D(1 / 3, 0.0), AffineMap1D(1 / 3, 2 / 3)], weights)


PRESETS = {"dyadic": dyadic, "cantor": middle_thirds, "middle_thirds": middle_thirds}
