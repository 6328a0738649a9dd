import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from pslab.geometry import (
    DimConstants,
    ball_intersection_volume,
    ball_symdiff_volume,
    ball_volume,
    kn_constant,
    kn_quadrature,
    ln_constant,
    symdiff_bound,
    unit_ball_volume,
)


def lens_area(r, d):
    # two equal discs at distance d
    return 2 * r * r * math.acos(d / (2 * r)) - 0.5 * d * math.sqrt(4 * r * r - d * d)


def sphere_lens_volume(r, d):
    return math.pi * (4 * r + d) * (2 * r - d) ** 2 / 12


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)
    # recursion omega_n = 2 pi / n omega_{n-2}
    for n in range(3, 30):
        assert unit_ball_volume(n) == pytest.approx(2 * math.pi / n * unit_ball_volume(n - 2), rel=1e-13)


def test_ball_volume_examples():
    assert ball_volume(2, 1.0) == pytest.approx(math.pi)
    assert ball_volume(3, 1.0) == pytest.approx(4.18879, abs=1e-5)
    assert ball_volume(1, 0.0) == 0.0


@pytest.mark.parametrize("n, r", [(0, 1.0), (2, -0.1)])
def test_ball_volume_rejects(n, r):
    with pytest.raises(ValueError):
        ball_volume(n, r)


def test_kn_small_dimensions():
    assert kn_constant(1) == pytest.approx(1.0, rel=1e-15)
    quarter, _ = integrate.quad(lambda t: math.cos(t) ** 2, 0, math.pi / 2)
    assert quarter == pytest.approx(math.pi / 4, rel=1e-12)
    assert kn_constant(2) == pytest.approx(4 / math.pi, rel=1e-14)
    assert kn_constant(2) == pytest.approx(1.27324, abs=1e-5)


@pytest.mark.parametrize("n", range(1, 11))
def test_kn_matches_quadrature(n):
    val, _ = integrate.quad(lambda t: math.cos(t) ** n, 0, math.pi / 2, epsabs=0, epsrel=1e-13)
    assert kn_constant(n) == pytest.approx(1 / val, rel=1e-10)
    assert kn_quadrature(n) == pytest.approx(kn_constant(n), rel=1e-10)


def test_kn_asymptotics():
    ratios = [kn_constant(n) / math.sqrt(2 * n / math.pi) for n in range(1, 51)]
    assert all(abs(b - 1) <= abs(a - 1) for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 1) < 0.01


def test_dim_constants():
    c = DimConstants.for_dimension(3, p=2.0)
    assert c.omega_n == pytest.approx(4 * math.pi / 3)
    assert c.omega_n_minus_1 == pytest.approx(math.pi)
    assert c.K_n == pytest.approx(2 * math.pi / (4 * math.pi / 3))
    assert c.L_n == pytest.approx(math.sqrt(2) * (4 * math.pi / 3) ** (-1 / 3))
    assert ln_constant(2, 2.0) == pytest.approx(math.sqrt(2 / math.pi))


def test_symdiff_examples():
    assert ball_symdiff_volume(1, 1.0, 0.5) == pytest.approx(1.0, abs=1e-15)
    expected = 2 * (math.pi - (2 * math.acos(0.1) - 0.1 * math.sqrt(3.96)))
    assert ball_symdiff_volume(2, 1.0, 0.2) == pytest.approx(expected, rel=1e-12)
    assert ball_symdiff_volume(2, 1.0, 0.2) == pytest.approx(0.79866, abs=1e-5)
    for n in (1, 2, 3):
        assert ball_symdiff_volume(n, 0.7, 0.0) == 0.0


def test_symdiff_lens_monte_carlo():
    rng = np.random.default_rng(2024)
    hits = 0
    total = 10_000_000
    for _ in range(10):
        pts = rng.uniform(-1.0, 1.2, size=(total // 10, 2))
        a = np.hypot(pts[:, 0], pts[:, 1]) < 1
        b = np.hypot(pts[:, 0] - 0.2, pts[:, 1]) < 1
        hits += np.count_nonzero(a ^ b)
    area = 2.2**2
    frac = hits / total
    est = frac * area
    sigma = area * math.sqrt(frac * (1 - frac) / total)
    assert abs(est - ball_symdiff_volume(2, 1.0, 0.2)) < 5 * sigma


@pytest.mark.parametrize("r, d", [(1.0, 0.3), (0.5, 0.9), (2.0, 0.01)])
def test_intersection_closed_forms(r, d):
    assert ball_intersection_volume(2, r, r, d) == pytest.approx(lens_area(r, d), rel=1e-12)
    assert ball_intersection_volume(3, r, r, d) == pytest.approx(sphere_lens_volume(r, d), rel=1e-12)
    assert ball_intersection_volume(1, r, r, d) == pytest.approx(2 * r - d)


def test_unequal_intersection_containment():
    # small ball inside the big one
    assert ball_intersection_volume(2, 1.0, 0.3, 0.5) == pytest.approx(math.pi * 0.09)
    assert ball_intersection_volume(3, 0.3, 1.0, 0.5) == pytest.approx(4 * math.pi / 3 * 0.027)
    assert ball_intersection_volume(2, 1.0, 0.3, 1.5) == 0.0


def test_symdiff_disjoint_and_unsupported():
    assert ball_symdiff_volume(2, 1.0, 5.0) == pytest.approx(2 * math.pi)
    with pytest.raises(ValueError):
        ball_symdiff_volume(4, 1.0, 0.1)


def test_symdiff_bound_examples():
    assert symdiff_bound(1, 2.0, 0.5) == pytest.approx(1.0)
    assert symdiff_bound(2, math.pi, 0.2) == pytest.approx(0.8)
    assert symdiff_bound(3, 4 * math.pi / 3, 0.0) == 0.0
    assert ball_symdiff_volume(2, 1.0, 0.2) <= symdiff_bound(2, math.pi, 0.2)


@given(st.sampled_from([1, 2, 3]), st.floats(0.01, 2.0), st.floats(0.0, 1.0))
def test_symdiff_below_bound(n, r, frac):
    d = 2 * r * frac
    exact = ball_symdiff_volume(n, r, d)
    bound = symdiff_bound(n, ball_volume(n, r), d)
    assert exact <= bound * (1 + 1e-12) + 1e-15
    if n == 1:
        assert exact == pytest.approx(bound, rel=1e-12, abs=1e-15)


@given(st.sampled_from([1, 2, 3]), st.floats(0.05, 2.0))
def test_symdiff_monotone_and_continuous(n, r):
    d = np.linspace(0, 3 * r, 301)
    vals = ball_symdiff_volume(n, r, d)
    assert np.all(np.diff(vals) >= -1e-13 * vals.max())
    left = ball_symdiff_volume(n, r, 2 * r * (1 - 1e-9))
    assert left == pytest.approx(2 * ball_volume(n, r), rel=1e-6)


@pytest.mark.parametrize("n", [2, 3])
def test_intersection_near_internal_tangency(n):
    # B(d, 0.3) pokes out of B(0, 0.5) by ~1e-15, so the lens equals the small ball
    inter = ball_intersection_volume(n, 0.5, 0.3, 0.2 + 1e-15)
    assert inter == pytest.approx(ball_volume(n, 0.3), rel=1e-14)


def test_symdiff_tiny_offset():
    for n in (2, 3):
        assert ball_symdiff_volume(n, 0.25, 1e-300) >= 0
        assert ball_symdiff_volume(n, 0.25, 1e-12) == pytest.approx(symdiff_bound(n, ball_volume(n, 0.25), 1e-12), rel=1e-6)


@given(st.sampled_from([2, 3]), st.floats(0.05, 2.0), st.floats(1e-30, 1e-3), st.floats(0.0, 1.0))
def test_intersection_loses_at_most_the_translation_bound(n, r, d, shrink):
    # |B(0, r) minus B(d, r')| <= |B(0, r) minus B(0, r')| + symdiff bound, for every tiny d
    r2 = r * (1 - 0.5 * shrink)
    lost = ball_volume(n, r) - ball_intersection_volume(n, r, r2, d)
    room = ball_volume(n, r) - ball_volume(n, r2)
    assert lost <= room + symdiff_bound(n, ball_volume(n, r), d) * 0.5 + 1e-15 * ball_volume(n, r)
    assert lost >= room - 1e-15 * ball_volume(n, r)
