"""Acceptance suite.

Run with ``pytest tests/test_acceptance.py``; the terminal summary ends with one
``PASS``/``FAIL`` line per criterion. ``python tests/test_acceptance.py`` does
the same.
"""

import math
import sys
from fractions import Fraction as F

import numpy as np
import pytest

from flatlab._fit import loglog_slope
from flatlab.config import loads
from flatlab.curves import graph_curve, moment_curve
from flatlab.errors import DegenerateIFS
from flatlab.experiments import run
from flatlab.ifs import WeightedIFS, contraction_ratios, cut_set, dyadic, middle_thirds
from flatlab.lift import discretize_affine, lift, verify_conjugacy
from flatlab.measures import (
    DiscreteMeasure,
    discretize,
    discretize_depth,
    frostman_fit,
    nonconcentration_sweep,
    pushforward,
)
from flatlab.moments import flattening_report, fourier_moment_consistency
from flatlab.spectral import (
    Ball,
    CRegion,
    ERegion,
    ft_discrete,
    lp_region_integrals,
    pointwise_decay_fit,
    superlevel_cover_count,
    superlevel_cover_count_measure,
)

criterion = pytest.mark.criterion


def random_ifs(rng, exact, n_max=4):
    while True:
        n = int(rng.integers(2, n_max + 1))
        if exact:
            lam = [F(int(rng.choice([-1, 1]) * rng.integers(1, 8)), int(rng.integers(8, 13))) for _ in range(n)]
            t = [F(int(rng.integers(-9, 10)), int(rng.integers(1, 10))) for _ in range(n)]
            raw = rng.integers(1, 10, n)
            w = [F(int(r), int(raw.sum())) for r in raw]
        else:
            lam = list(rng.uniform(0.15, 0.7, n) * rng.choice([-1, 1], n))
            t = list(rng.uniform(-1, 1, n))
            raw = rng.uniform(0.1, 1, n)
            w = list(raw / raw.sum())
        try:
            return WeightedIFS.from_triples(list(zip(lam, t, w)))
        except DegenerateIFS:
            continue


def recursive_cut_set(ifs, tau):
    """Depth-first reading of the definition, letter order."""
    lam = [abs(float(f.lam)) for f in ifs.maps]
    out = []

    def walk(word, r):
        for i, li in enumerate(lam):
            if r * li < tau:
                out.append(word + (i,))
            else:
                walk(word + (i,), r * li)

    walk((), 1.0)
    return out


@criterion(1, "lift identity is exact")
def test_lift_identity():
    rng = np.random.default_rng(1)
    for _ in range(100):
        ifs = random_ifs(rng, exact=True)
        ell = int(rng.integers(1, 5))
        xs = [F(int(rng.integers(-20, 21)), int(rng.integers(1, 20))) for _ in range(5)]
        d = verify_conjugacy(ifs, lift(ifs, ell), xs)
        assert d == 0 and isinstance(d, F)
    for _ in range(100):
        ifs = random_ifs(rng, exact=False)
        ell = int(rng.integers(1, 5))
        d = verify_conjugacy(ifs, lift(ifs, ell), rng.uniform(-1, 1, 5))
        assert 0 <= d < 1e-12


@criterion(2, "lift and pushforward agree")
def test_lift_pushforward_coherence():
    rng = np.random.default_rng(2)
    cases = [dyadic(), middle_thirds()] + [random_ifs(rng, exact=False, n_max=3) for _ in range(3)]
    for ifs in cases:
        for ell in (2, 3):
            a = discretize_affine(lift(ifs, ell), 6, x0=0.0).canonical()
            b = pushforward(discretize_depth(ifs, 6), moment_curve(ell, (-10, 10))).canonical()
            assert a.n_atoms == b.n_atoms
            assert np.abs(a.points - b.points).max() < 1e-10
            assert np.abs(a.weights - b.weights).max() < 1e-12


@criterion(3, "cut-sets match the definition")
def test_cut_set_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        ifs = random_ifs(rng, exact=False)
        for tau in (0.3, 0.1, 0.03):
            cs = cut_set(ifs, tau)
            assert cs.words == recursive_cut_set(ifs, tau)
            assert abs(cs.weights.sum() - 1) < 1e-10
        taus = [2.0**-k for k in range(4, 21)]
        sizes = [len(contraction_ratios(ifs, t)) for t in taus]
        slope = loglog_slope([math.log(1 / t) for t in taus], sizes, min_points=3)
        assert slope <= ifs.n + 2


@criterion(4, "Fourier and moment sums are comparable")
def test_fourier_moment_equivalence():
    cantor = middle_thirds()
    measures = {
        "lebesgue": discretize(dyadic(), 2.0**-14),
        "cantor": discretize(cantor, 3.0**-10),
        "cantor_on_parabola": pushforward(discretize(cantor, 2.0**-14), moment_curve(2)),
    }
    for name, m in measures.items():
        for level in range(4, 11):
            r = fourier_moment_consistency(m, level, threads=8).ratio
            assert 1 / 64 <= r <= 64, (name, level, r)
    origin1 = DiscreteMeasure.delta([0.0])
    assert all(fourier_moment_consistency(origin1, lv).ratio == pytest.approx(0.5, rel=1e-9)
               for lv in range(4, 11))
    origin2 = DiscreteMeasure.delta([0.0, 0.0])
    ratios = [fourier_moment_consistency(origin2, lv, threads=8).ratio for lv in range(4, 11)]
    assert max(ratios) <= 1.1 * min(ratios)


@criterion(5, "Frostman exponents")
def test_frostman():
    cantor = frostman_fit(discretize(middle_thirds(), 3.0**-8), [3.0**-k for k in range(2, 7)])
    assert cantor.exponent == pytest.approx(math.log(2) / math.log(3), abs=0.05)
    radii = [2.0**-k for k in range(2, 9)]
    assert frostman_fit(discretize(dyadic(), 2.0**-14), radii).exponent == pytest.approx(1, abs=0.1)
    assert frostman_fit(DiscreteMeasure.delta([0.0]), radii).exponent == pytest.approx(0, abs=0.02)


@criterion(6, "superlevel covers grow slowly")
def test_tsujii_trend():
    Rs = [2.0**k for k in (8, 10, 12, 14)]
    counts = [superlevel_cover_count(middle_thirds(), R, 0.02) for R in Rs]
    assert all(c < R for c, R in zip(counts, Rs))
    assert loglog_slope(Rs, [max(c, 1) for c in counts], min_points=3) <= 0.6
    atom = DiscreteMeasure.delta([0.0])
    contrast = [superlevel_cover_count_measure(atom, R, 0.02) for R in Rs]
    assert loglog_slope(Rs, contrast, min_points=3) == pytest.approx(1, abs=0.02)


@criterion(7, "convolution powers flatten")
def test_flattening_trend():
    curved = flattening_report(middle_thirds(), moment_curve(2), 4, range(4, 12))
    dims = [curved.dims[p] for p in (1, 2, 3, 4)]
    assert all(b >= a - 0.05 for a, b in zip(dims, dims[1:])), dims
    assert dims[3] > dims[0]
    line = flattening_report(middle_thirds(), graph_curve([[0]]), 4, range(4, 12))
    assert all(d <= 1.1 for d in line.dims.values()), line.dims


@criterion(8, "no decay transverse to a line")
def test_degenerate_direction():
    line = pushforward(discretize(middle_thirds(), 3.0**-8), graph_curve([[0]]))
    assert pointwise_decay_fit(line, [[1.0]], 2**10).exponent <= 0.02
    for zeta in np.random.default_rng(8).uniform(-1e4, 1e4, 20):
        assert ft_discrete(line, (0.0, zeta)) == 1


@criterion(9, "ball integral splits into C and E")
def test_region_decomposition():
    for ifs in (middle_thirds(), dyadic()):
        nu = pushforward(discretize(ifs, 2.0**-10), moment_curve(2))
        (ball, _), (c, _), (e, _) = lp_region_integrals(nu, [Ball(64), CRegion(64, 0.5), ERegion(64, 0.5)], 2,
                                                        threads=8)
        assert abs(ball - (c + e)) <= 0.02 * ball


@criterion(10, "slab non-concentration")
def test_nonconcentration_curve():
    # Known red: the worst open slab keeps mass 1 for eps >= 1/8 and the
    # best achievable fit over 2^-1..2^-6 is about 0.21. See the decisions ledger.
    nu = pushforward(discretize(dyadic(), 2.0**-10), moment_curve(2))
    fit = nonconcentration_sweep(nu, [2.0**-k for k in range(1, 7)])
    assert fit.exponent > 0.3, fit.table


@criterion(10, "slab non-concentration")
def test_nonconcentration_line_control():
    line = pushforward(discretize(dyadic(), 2.0**-10), graph_curve([[0.2, 0.5]]))
    assert nonconcentration_sweep(line, [2.0**-k for k in range(1, 7)]).exponent <= 0.02


DETERMINISM_CONFIGS = {
    "lift-verify": '[ifs]\nmaps = [["1/2", 0], ["1/2", "1/2"]]\nweights = ["1/2", "1/2"]\n',
    "tsujii-scan": '[ifs]\npreset = "cantor"\n[tsujii]\nR = [256, 1024]\n',
    "frostman-scan": '[ifs]\npreset = "cantor"\n',
    "nonconcentration-sweep": '[ifs]\npreset = "dyadic"\n[nonconcentration]\ntau = 0.001\n',
    "flattening-report": '[ifs]\npreset = "cantor"\n[flattening]\np_max = 2\nm_min = 3\nm_max = 7\n',
    "fourier-scan": '[ifs]\npreset = "cantor"\n[fourier]\nR = [8, 16]\np = [2]\ntau = 0.001\n',
    "consistency-check": '[ifs]\npreset = "cantor"\n[consistency]\nlevels = [3, 4, 5]\n',
}


@criterion(11, "reruns are bit-identical")
@pytest.mark.parametrize("kind", sorted(DETERMINISM_CONFIGS))
def test_determinism(kind):
    cfg = loads(DETERMINISM_CONFIGS[kind])
    first = [t.to_csv() for t in run(kind, cfg).tables]
    second = [t.to_csv() for t in run(kind, cfg).tables]
    assert first == second and first


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
