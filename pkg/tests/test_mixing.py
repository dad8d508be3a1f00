"""Correlation coefficients and empirical decay fits."""

import numpy as np
import pytest

from toral_lab import mixing
from toral_lab.errors import NotErgodic
from toral_lab.exact_algebra import IntMatrix

CAT = IntMatrix([[2, 1], [1, 1]])


def _cos_pair():
    # g1 = cos(2 pi x1), g2 = cos(2 pi x2)
    g1 = {(1, 0): 0.5, (-1, 0): 0.5}
    g2 = {(0, 1): 0.5, (0, -1): 0.5}
    return g1, g2


def test_cos_pair_vanishes_for_all_n():
    g1, g2 = _cos_pair()
    for n in range(1, 51):
        assert mixing.correlation(CAT, g1, g2, n) == 0
    # and the self-pair at n=0 is the L2 norm squared
    assert abs(mixing.correlation(CAT, g1, g1, 0) - 0.5) < 1e-15


def test_correlation_inverse_conjugation_identity():
    # <g1 o L^n, g2> = conj(<g2 o (L^{-1})^n, g1>)
    rng = np.random.default_rng(0)
    g1 = mixing.holder_test_field(2, 6.0, 0.5, rng)
    g2 = mixing.holder_test_field(2, 6.0, 0.5, rng)
    Linv = CAT.inverse_exact()
    for n in (0, 1, 3, 7):
        a = mixing.correlation(CAT, g1, g2, n)
        b = mixing.correlation(Linv, g2, g1, n)
        assert abs(a - np.conj(b)) < 1e-14


def test_correlation_zero_mean_flag():
    g1 = {(0, 0): 2.0, (1, 0): 0.5, (-1, 0): 0.5}
    g2 = {(0, 0): 3.0, (0, 1): 0.5, (0, -1): 0.5}
    raw = mixing.correlation(CAT, g1, g2, 5)
    centered = mixing.correlation(CAT, g1, g2, 5, zero_mean=True)
    assert abs(raw - 6.0) < 1e-15
    assert abs(centered) < 1e-15


def test_holder_field_normalization():
    rng = np.random.default_rng(1)
    g = mixing.holder_test_field(2, 8.0, 0.5, rng)
    assert (0, 0) not in g   # zero mean
    for n, c in g.items():
        want = float(np.hypot(*n)) ** -1.5
        assert abs(abs(c) - want) < 1e-13
        assert abs(np.conj(c) - g[tuple(-v for v in n)]) < 1e-15


def test_l2_tail_bound_dominates_true_tail():
    # compare the bound at radius R with the exact mass in R < ||n|| <= 3R
    d, alpha, R = 2, 0.5, 8.0
    bound = mixing.l2_tail_bound(d, R, alpha)
    axes = np.arange(-30, 31)
    grid = np.stack(np.meshgrid(axes, axes, indexing="ij"), -1).reshape(-1, 2)
    nrm = np.linalg.norm(grid, axis=1)
    inside = (nrm > R) & (nrm <= 30)
    partial = np.sqrt((nrm[inside] ** (-2 * (d / 2 + alpha))).sum())
    assert bound >= partial
    assert bound <= 10 * partial   # not absurdly loose either


def test_trajectory_matches_per_n_correlation():
    rng = np.random.default_rng(2)
    g1 = mixing.holder_test_field(2, 10.0, 0.5, rng)
    g2 = mixing.holder_test_field(2, 10.0, 0.5, rng)
    fast = mixing._correlation_trajectory(CAT, g1, g2, 12, 10.0)
    slow = np.array([abs(mixing.correlation(CAT, g1, g2, n))
                     for n in range(1, 13)])
    assert np.abs(fast - slow).max() == 0.0


def test_decay_fit_cat_map():
    trace = mixing.decay_fit(CAT, alpha=0.5, trials=4, n_max=30, radius=48.0)
    assert trace.gamma > 0
    assert trace.r_squared >= 0.9
    assert trace.fit_range[0] == 1
    assert len(trace.rows) == 30


def test_decay_fit_rejects_non_ergodic():
    rot = IntMatrix([[0, -1], [1, 0]])
    with pytest.raises(NotErgodic):
        mixing.decay_fit(rot, alpha=0.5, trials=1)
