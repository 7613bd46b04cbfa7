import math
from fractions import Fraction as F

import numpy as np
from hypothesis import HealthCheck, given, reject, settings
from hypothesis import strategies as st

from flatlab.curves import moment_curve
from flatlab.errors import DegenerateIFS
from flatlab.ifs import WeightedIFS, attractor_interval, cut_set
from flatlab.lift import lift, verify_conjugacy
from flatlab.measures import DiscreteMeasure, Hyperplane, ball_mass, convolve, discretize, slab_mass
from flatlab.moments import bin, moment_sum
from flatlab.spectral import ft_discrete

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def float_ifs(draw, max_n=4):
    n = draw(st.integers(2, max_n))
    lam = [draw(st.floats(0.1, 0.7)) * draw(st.sampled_from([-1, 1])) for _ in range(n)]
    t = [draw(st.floats(-1, 1)) for _ in range(n)]
    w = np.array([draw(st.floats(0.05, 1)) for _ in range(n)])
    try:
        return WeightedIFS.from_maps(list(zip(lam, t)), (w / w.sum()).tolist())
    except DegenerateIFS:
        reject()


@st.composite
def rational_ifs(draw, max_n=4):
    n = draw(st.integers(2, max_n))
    lam = [F(draw(st.integers(-6, 6).filter(bool)), draw(st.integers(7, 12))) for _ in range(n)]
    t = [F(draw(st.integers(-9, 9)), draw(st.integers(1, 9))) for _ in range(n)]
    raw = [draw(st.integers(1, 9)) for _ in range(n)]
    w = [F(r, sum(raw)) for r in raw]
    try:
        return WeightedIFS.from_triples(list(zip(lam, t, w)))
    except DegenerateIFS:
        reject()


@st.composite
def measures(draw, dim=1, max_atoms=12):
    n = draw(st.integers(1, max_atoms))
    pts = draw(st.lists(st.lists(st.floats(-2, 2), min_size=dim, max_size=dim), min_size=n, max_size=n))
    raw = np.array(draw(st.lists(st.floats(0.01, 1), min_size=n, max_size=n)))
    return DiscreteMeasure(np.array(pts), raw / raw.sum())


@SETTINGS
@given(float_ifs(), st.floats(0.02, 0.5))
def test_cut_set_is_a_stopping_antichain(ifs, tau):
    cs = cut_set(ifs, tau)
    lam = np.abs(ifs.ratios)
    assert math.isclose(cs.weights.sum(), 1, abs_tol=1e-10)
    words = [cs[i] for i in range(len(cs))]
    assert words == sorted(words)
    for i, w in enumerate(words):
        r = np.prod(lam[list(w)])
        parent = np.prod(lam[list(w[:-1])])
        assert r < tau <= parent
        assert math.isclose(abs(cs.ratios[i]), r, rel_tol=1e-12)
    # no word is a prefix of another
    ws = set(words)
    assert not any(w[:k] in ws for w in words for k in range(1, len(w)))


@SETTINGS
@given(rational_ifs(), st.integers(1, 4), st.lists(st.fractions(-3, 3, max_denominator=20), min_size=1, max_size=5))
def test_lift_conjugacy_exact(ifs, ell, xs):
    assert verify_conjugacy(ifs, lift(ifs, ell), xs) == 0


@SETTINGS
@given(measures(), measures())
def test_convolution_commutes_and_keeps_mass(a, b):
    ab, ba = convolve(a, b).canonical(), convolve(b, a).canonical()
    assert np.allclose(ab.points, ba.points, atol=1e-12) and np.allclose(ab.weights, ba.weights)
    assert math.isclose(ab.weights.sum(), 1, abs_tol=1e-12)


@SETTINGS
@given(measures(max_atoms=6), measures(max_atoms=6), measures(max_atoms=6), st.floats(-5, 5))
def test_convolution_associative_in_fourier(a, b, c, th):
    left = convolve(convolve(a, b), c)
    right = convolve(a, convolve(b, c))
    assert abs(ft_discrete(left, th) - ft_discrete(right, th)) < 1e-9
    assert abs(ft_discrete(left, th) - ft_discrete(a, th) * ft_discrete(b, th) * ft_discrete(c, th)) < 1e-9


@SETTINGS
@given(measures(dim=2), st.lists(st.floats(-30, 30), min_size=2, max_size=2))
def test_fourier_bounded_and_conjugate_symmetric(m, xi):
    xi = np.array(xi)
    v = ft_discrete(m, xi)
    assert abs(v) <= 1 + 1e-12
    assert abs(ft_discrete(m, -xi) - v.conjugate()) < 1e-12


@SETTINGS
@given(measures(dim=2), st.floats(0.01, 1), st.floats(0.01, 1), st.floats(0, 2 * math.pi), st.floats(-1, 1))
def test_ball_and_slab_monotone_in_radius(m, r1, r2, angle, c):
    lo, hi = sorted((r1, r2))
    x = m.points[0]
    assert ball_mass(m, x, lo) <= ball_mass(m, x, hi)
    w = Hyperplane((math.cos(angle), math.sin(angle)), c)
    assert slab_mass(m, w, lo) <= slab_mass(m, w, hi)


@SETTINGS
@given(measures(dim=2), st.integers(0, 12), st.sampled_from([1.5, 2, 3, math.inf]))
def test_moment_sum_bounds(m, level, q):
    h = bin(m, level)
    s = moment_sum(h, q)
    assert math.isclose(h.total, 1, abs_tol=1e-12)
    assert 0 < s <= 1 + 1e-12
    if q != math.inf:
        # a probability vector on k cells has s >= k^(1 - q)
        assert s >= len(h.cells) ** (1 - q) * (1 - 1e-9)


@SETTINGS
@given(float_ifs(max_n=3), st.floats(0.01, 0.3))
def test_discretized_atoms_hug_attractor_and_lie_on_curve(ifs, tau):
    m = discretize(ifs, tau)
    a, b = attractor_interval(ifs)
    # atoms are f_w(0), within |lam_w| * dist(0, hull) of the attractor
    slack = tau * max(abs(a), abs(b)) + 1e-12
    assert np.all((m.points >= a - slack) & (m.points <= b + slack))
    pts = moment_curve(3, (a, b)).evaluate_many(m.points[:, 0])
    assert np.allclose(pts[:, 1], pts[:, 0] ** 2) and np.allclose(pts[:, 2], pts[:, 0] ** 3)
