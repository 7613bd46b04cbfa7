import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest

from flatlab.errors import BadWeights, DegenerateIFS, NonContraction, SizeOverflow, TauOutOfRange
from flatlab.ifs import (
    AffineMap1D,
    WeightedIFS,
    attractor_interval,
    compose,
    contraction_ratio_set,
    contraction_ratios,
    cut_set,
    dyadic,
    iterate,
)


def brute_cut_set(ifs, tau):
    """Every word up to the depth bound whose ratio first drops below tau."""
    lam = [abs(float(f.lam)) for f in ifs.maps]
    depth = math.ceil(math.log(tau) / math.log(max(lam))) + 1
    out = []
    for k in range(1, depth + 1):
        for w in itertools.product(range(ifs.n), repeat=k):
            r = math.prod(lam[i] for i in w)
            if r < tau and math.prod(lam[i] for i in w[:-1]) >= tau:
                out.append(w)
    return sorted(out)


def test_validate_accepts_dyadic():
    WeightedIFS.from_triples([(0.5, 0, 0.5), (0.5, 0.5, 0.5)])


def test_validate_rejects_shared_fixed_point():
    with pytest.raises(DegenerateIFS):
        WeightedIFS.from_triples([(0.5, 0, 0.5), (0.5, 0, 0.5)])


def test_validate_rejects_expanding_map():
    with pytest.raises(NonContraction):
        WeightedIFS.from_triples([(1.2, 0, 0.5), (0.5, 0.5, 0.5)])


@pytest.mark.parametrize("weights", [(0.5, 0.6), (1.0, 0.0), (-0.5, 1.5)])
def test_validate_rejects_bad_weights(weights):
    with pytest.raises(BadWeights):
        dyadic(weights)


def test_negative_ratio_allowed():
    ifs = WeightedIFS.from_triples([(-0.5, 0, 0.5), (0.5, 0.5, 0.5)])
    assert ifs.max_ratio == 0.5


def test_compose_hand_example():
    ifs = WeightedIFS.from_triples([(F(1, 2), 0, F(1, 2)), (F(1, 2), F(1, 2), F(1, 2))])
    f, p = compose(ifs, (0, 1))
    assert (f.lam, f.t, p) == (F(1, 4), F(1, 4), F(1, 4))
    assert f(F(1)) == F(1, 2)


def test_compose_empty_word_is_identity():
    f, p = compose(dyadic(), ())
    assert (f.lam, f.t, p) == (1, 0, 1)


def test_compose_single_letter():
    ifs = WeightedIFS.from_triples([(F(1, 2), 0, F(1, 3)), (F(1, 3), F(2, 3), F(2, 3))])
    f, p = compose(ifs, (1,))
    assert (f.lam, f.t, p) == (F(1, 3), F(2, 3), F(2, 3))


def test_cut_set_dyadic():
    cs = cut_set(dyadic(), 0.3)
    assert cs.words == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert cs.translations.tolist() == [0, 0.25, 0.5, 0.75]


def test_cut_set_mixed_ratios():
    ifs = WeightedIFS.from_maps([(0.5, 0), (1 / 3, 2 / 3)])
    cs = cut_set(ifs, 0.2)
    assert cs.words == [(0, 0, 0), (0, 0, 1), (0, 1), (1, 0), (1, 1)]
    ratios = contraction_ratio_set(cs.words, ifs)
    assert sorted(ratios) == pytest.approx(sorted([1 / 8, 1 / 12, 1 / 6, 1 / 9]))
    assert len(ratios) == 4


def test_cut_set_coarse_tau_gives_letters():
    ifs = WeightedIFS.from_maps([(0.5, 0), (1 / 3, 2 / 3)])
    assert cut_set(ifs, 0.6).words == [(0,), (1,)]


@pytest.mark.parametrize("tau", [0.0, 1.0, -0.1, 1.5])
def test_cut_set_tau_range(tau):
    with pytest.raises(TauOutOfRange):
        cut_set(dyadic(), tau)


def test_cut_set_size_cap():
    with pytest.raises(SizeOverflow):
        cut_set(dyadic(), 2.0**-20, max_words=1000)


def test_cut_set_matches_brute_force():
    ifs = WeightedIFS.from_maps([(0.5, 0), (-0.3, 0.7), (0.25, 0.2)], [0.2, 0.5, 0.3])
    for tau in (0.3, 0.1, 0.03):
        assert cut_set(ifs, tau).words == brute_cut_set(ifs, tau)


def test_ratio_set_examples():
    assert contraction_ratio_set(cut_set(dyadic(), 0.3).words, dyadic()) == frozenset({0.25})
    assert contraction_ratios(dyadic(), 0.3) == frozenset({0.25})
    homog = WeightedIFS.from_maps([(0.3, 0), (0.3, 0.5), (0.3, 0.7)])
    assert len(contraction_ratios(homog, 1e-5)) == 1


def test_exact_ratio_set_uses_fractions():
    ifs = WeightedIFS.from_triples([(F(1, 2), 0, F(1, 2)), (F(1, 3), F(2, 3), F(1, 2))])
    assert contraction_ratios(ifs, 0.2) == {F(1, 8), F(1, 12), F(1, 6), F(1, 9)}


def test_iterate_dyadic():
    it = iterate(dyadic(), 2)
    assert it.ratios.tolist() == [0.25] * 4
    assert it.translations.tolist() == [0, 0.25, 0.5, 0.75]
    assert it.probabilities.tolist() == [0.25] * 4


def test_iterate_identity_and_cap():
    ifs = dyadic()
    assert iterate(ifs, 1) is ifs
    three = WeightedIFS.from_maps([(0.3, 0), (0.3, 0.3), (0.3, 0.6)])
    with pytest.raises(SizeOverflow):
        iterate(three, 13)


def test_iterate_exact_keeps_fractions():
    ifs = WeightedIFS.from_triples([(F(1, 2), 0, F(1, 2)), (F(1, 2), F(1, 2), F(1, 2))])
    it = iterate(ifs, 3)
    assert it.is_exact and sum(it.weights) == 1


def _invariant(ifs, a, b):
    for f in ifs.maps:
        lo, hi = sorted((f(a), f(b)))
        if lo < a - 1e-15 or hi > b + 1e-15:
            return False
    return True


def test_attractor_interval_examples():
    assert attractor_interval(dyadic()) == (0.0, 1.0)
    shifted = WeightedIFS.from_maps([(0.5, 0.25), (0.5, 0.5)])
    assert attractor_interval(shifted) == (0.5, 1.0)
    sym = WeightedIFS.from_maps([(-0.5, 0), (0.5, 0.5)])
    a, b = attractor_interval(sym)
    assert a <= 0 and b >= 1 and _invariant(sym, a, b)


def test_text_round_trip():
    ifs = WeightedIFS.from_maps([(0.37, 0.21), (-0.2, 0.9)], [0.3, 0.7])
    back = WeightedIFS.from_text(ifs.to_text())
    assert back.ratios.tolist() == ifs.ratios.tolist()
    assert back.translations.tolist() == ifs.translations.tolist()
    assert back.probabilities.tolist() == ifs.probabilities.tolist()


def test_affine_map_then():
    f = AffineMap1D(0.5, 1.0)
    g = AffineMap1D(2 / 3, -1.0)
    assert f.then(g)(0.3) == pytest.approx(f(g(0.3)))


def test_cut_set_weights_match_composition():
    ifs = WeightedIFS.from_maps([(0.5, 0), (1 / 3, 2 / 3)], [0.4, 0.6])
    cs = cut_set(ifs, 0.05)
    for i, w in enumerate(cs.words):
        f, p = compose(ifs, w)
        assert cs.ratios[i] == pytest.approx(f.lam)
        assert cs.translations[i] == pytest.approx(f.t)
        assert cs.weights[i] == pytest.approx(p)
    assert np.isclose(cs.total_weight(), 1, atol=1e-10)
