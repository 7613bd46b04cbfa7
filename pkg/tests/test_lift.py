from fractions import Fraction as F

import numpy as np
import pytest

from flatlab.curves import moment_curve
from flatlab.errors import DimMismatch, SizeOverflow
from flatlab.ifs import WeightedIFS, dyadic, iterate
from flatlab.lift import (
    AffineIFS,
    contraction_depth,
    discretize_affine,
    ensure_contracting,
    lift,
    verify_conjugacy,
)
from flatlab.measures import discretize, discretize_depth, pushforward

EXACT_DYADIC = WeightedIFS.from_triples([(F(1, 2), 0, F(1, 2)), (F(1, 2), F(1, 2), F(1, 2))])


def test_lift_diagonal_when_t_is_zero():
    ifs = WeightedIFS.from_triples([(F(1, 2), 0, F(1, 2)), (F(1, 3), F(2, 3), F(1, 2))])
    F0 = lift(ifs, 2).maps[0]
    assert F0.A.tolist() == [[F(1, 2), 0], [0, F(1, 4)]]
    assert F0.b.tolist() == [0, 0]


def test_lift_hand_example():
    F1 = lift(EXACT_DYADIC, 2).maps[1]
    assert F1.A.tolist() == [[F(1, 2), 0], [F(1, 2), F(1, 4)]]
    assert F1.b.tolist() == [F(1, 2), F(1, 4)]


def test_lift_ell_one_is_the_map():
    ifs = WeightedIFS.from_triples([(F(1, 2), 0, F(1, 2)), (F(1, 3), F(2, 3), F(1, 2))])
    F1 = lift(ifs, 1).maps[1]
    assert F1.A.tolist() == [[F(1, 3)]] and F1.b.tolist() == [F(2, 3)]


def test_lift_is_lower_triangular_and_keeps_weights():
    ifs = WeightedIFS.from_maps([(0.37, 0.21), (-0.4, 0.5)], [0.3, 0.7])
    L = lift(ifs, 4)
    assert L.weights is ifs.weights
    for f in L.maps:
        assert np.all(np.triu(f.A, 1) == 0)


def test_conjugacy_exact_zero():
    d = verify_conjugacy(EXACT_DYADIC, lift(EXACT_DYADIC, 3), [0, 1, -1, F(7, 3)])
    assert d == 0 and isinstance(d, F)


def test_conjugacy_zero_translations():
    ifs = WeightedIFS.from_triples([(F(1, 2), 0, F(1, 2)), (F(-1, 3), 0, F(1, 4)), (F(1, 5), 1, F(1, 4))])
    assert verify_conjugacy(ifs, lift(ifs, 2), [F(k, 5) for k in range(-5, 6)]) == 0


def test_conjugacy_float():
    ifs = WeightedIFS.from_maps([(0.37, 0.21), (0.5, 0.4)])
    xs = np.random.default_rng(2).uniform(0, 1, 20)
    assert verify_conjugacy(ifs, lift(ifs, 4), xs) < 1e-12


def test_conjugacy_dim_mismatch():
    with pytest.raises(DimMismatch):
        verify_conjugacy(iterate(dyadic(), 2), lift(dyadic(), 2), [0.5])


def test_contraction_depth_examples():
    assert contraction_depth(0.5, 2) == 5
    assert contraction_depth(0.1, 1) == 1
    assert contraction_depth(0.5, 1) == 3
    assert contraction_depth(0.3, 1) == 2


def test_ensure_contracting():
    m, L = ensure_contracting(dyadic(), 2)
    assert m == 5 and L.n == 32
    assert L.max_spectral_norm() < 1 - 1e-12


def test_discretize_affine_matches_pushforward():
    for ell in (1, 2, 3):
        a = discretize_affine(lift(dyadic(), ell), 2, x0=0.0)
        b = pushforward(discretize(dyadic(), 0.3), moment_curve(ell))
        assert np.abs(a.points - b.points).max() < 1e-15
        assert a.weights.tolist() == b.weights.tolist()


def test_discretize_affine_depth_one_and_default_base():
    L = lift(dyadic(), 2)
    a = discretize_affine(L, 1)
    v0 = np.zeros(2)  # fixed point of x/2 is 0
    assert np.allclose(a.points, [f(v0) for f in L.maps])


def test_discretize_affine_budget():
    with pytest.raises(SizeOverflow):
        discretize_affine(lift(dyadic(), 2), 30)


def test_text_round_trip():
    L = lift(WeightedIFS.from_maps([(0.37, 0.21), (-0.4, 0.5)], [0.3, 0.7]), 3)
    back = AffineIFS.from_text(L.to_text())
    for f, g in zip(L.maps, back.maps):
        assert f.A.tolist() == g.A.tolist() and f.b.tolist() == g.b.tolist()
    assert back.weights == L.weights


def test_coherence_at_depth_six():
    ifs = WeightedIFS.from_maps([(0.4, 0.1), (-0.3, 0.9), (0.25, 0.5)], [0.2, 0.5, 0.3])
    for ell in (2, 3):
        a = discretize_affine(lift(ifs, ell), 6, x0=0.0)
        b = pushforward(discretize_depth(ifs, 6), moment_curve(ell, (-1, 2)))
        assert np.abs(a.points - b.points).max() < 1e-10
