"""Numerical experiments on Fourier flattening of self-similar measures pushed to curves."""

__version__ = "0.1.0"

from .curves import CurveSpec, IntervalUnion, good_set_complement, graph_curve, moment_curve
from .errors import FlatLabError
from .ifs import AffineMap1D, WeightedIFS, compose, contraction_ratio_set, cut_set, dyadic, iterate, middle_thirds
from .lift import AffineIFS, AffineMapND, discretize_affine, ensure_contracting, lift, verify_conjugacy
from .measures import (
    DiscreteMeasure,
    Hyperplane,
    ball_mass,
    convolution_power,
    convolve,
    discretize,
    frostman_fit,
    nonconcentration_sweep,
    pushforward,
    slab_mass,
)
from .moments import bin, flattening_report, fourier_moment_consistency, lq_dimension, moment_sum
from .spectral import (
    Ball,
    CRegion,
    ERegion,
    Frequency,
    ft_discrete,
    ft_selfsimilar,
    lp_region_integral,
    pointwise_decay_fit,
    region_contains,
    superlevel_cover_count,
)
