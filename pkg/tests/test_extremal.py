import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pslab.extremal import (
    ExtremalSpec,
    build_extremal,
    cantor_heights,
    extremal_exact_stats,
    family_cone,
    family_cone_frustrum,
    family_devils_staircase,
    family_staircase,
    make_family,
)
from pslab.field import gradient_norm_lp, lq_norm
from pslab.measure import CenterPath
from pslab.rearrangement import RadialProfile, Segment


def test_cone_values(cone):
    assert cone(np.array([0.0, 0.0])) == pytest.approx(1.0)
    assert cone(np.array([0.5, 0.0])) == pytest.approx(0.5)
    assert cone(np.array([1.5, 0.0])) == 0.0
    pts = np.random.default_rng(0).uniform(-1.2, 1.2, (1000, 2))
    assert np.allclose(cone(pts), np.maximum(1 - np.linalg.norm(pts, axis=1), 0.0), atol=1e-14)


def test_frustrum_values(frustrum):
    # lower cone 1 - |x| ... until radius 0.5, plateau 0.5 on B(0, 0.5) minus B(e, 0.3)
    assert frustrum(np.array([0.75, 0.0])) == pytest.approx(0.25)
    assert frustrum(np.array([-0.4, 0.0])) == pytest.approx(0.5)
    assert frustrum(np.array([0.2, 0.0])) == pytest.approx(1.0)
    assert frustrum(np.array([0.35, 0.0])) == pytest.approx(0.5 + 0.5 * (0.3 - 0.15) / 0.3)
    assert frustrum.top_height == 1.0
    assert np.allclose(frustrum.xi_infinity, [0.2, 0.0])


def test_level_sets_are_the_declared_balls(frustrum, rng):
    pts = rng.uniform(-1.1, 1.1, size=(20000, 2))
    vals = frustrum(pts)
    for t in (0.1, 0.49, 0.5, 0.7):
        c, r = frustrum.level_ball(t)
        inside = np.linalg.norm(pts - c, axis=1) < r
        assert np.array_equal(vals > t, inside)


def test_builder_rejects_moving_centers_without_plateau():
    prof = RadialProfile(2, (Segment(0.0, 0.5, 1.0, 0.5), Segment(0.5, 1.0, 0.5, 0.0)))
    path = CenterPath(np.array([0.0, 0.5]), np.array([[0.0, 0.0], [0.1, 0.0]]), np.array([0.1, 0.0]))
    with pytest.raises(ValueError, match="without plateau"):
        build_extremal(prof, path)


def test_builder_rejects_non_nested():
    with pytest.raises(ValueError, match="exceeds"):
        family_cone_frustrum(2, 0.5, 0.5, 0.3, 0.25)
    prof = RadialProfile(2, (Segment(0.0, 0.5, 1.0, 0.5), Segment(0.5, 1.0, 0.3, 0.0)))
    path = CenterPath(np.array([0.0, 0.5]), np.array([[0.0, 0.0], [0.3, 0.0]]), np.array([0.3, 0.0]))
    with pytest.raises(ValueError, match="nestedness"):
        build_extremal(prof, path)
    with pytest.raises(ValueError, match="height 0"):
        build_extremal(prof, CenterPath(np.array([0.1]), np.zeros((1, 2)), np.zeros(2)))


def test_staircase_validation():
    with pytest.raises(ValueError, match="r increasing"):
        family_staircase(2, [(0.5, 0.5), (1.0, 0.7)])
    s = family_staircase(2, [(0.5, 1.0), (1.0, 0.5)], centers=[0.0, 0.4])
    assert not s.profile.is_sobolev
    assert s(np.array([0.4, 0.0])) == pytest.approx(1.0)
    assert s(np.array([-0.5, 0.0])) == pytest.approx(0.5)


def test_exact_norms_against_grid(frustrum):
    st_ = extremal_exact_stats(frustrum)
    g = frustrum.sample(512)
    assert st_.lq_norm(1) == pytest.approx(lq_norm(g, 1), rel=2e-3)
    assert st_.lq_norm(2) == pytest.approx(lq_norm(g, 2), rel=2e-3)
    assert st_.grad_norm(2) == pytest.approx(gradient_norm_lp(g, 2), rel=0.03)


def test_frustrum_exact_quantities(frustrum):
    st_ = extremal_exact_stats(frustrum)
    assert st_.lambda_C == pytest.approx(0.16 * math.pi, rel=1e-12)
    assert st_.lq_norm(1) == pytest.approx(0.963422, abs=1e-6)
    assert st_.uXC_norm(1) == pytest.approx(0.08 * math.pi, rel=1e-12)
    assert st_.support_measure == pytest.approx(math.pi)
    # slopes: 0.5 / 0.5 on the bottom and 0.3 / 0.5 on top
    grads = [st_.gradient_on(s) for s in frustrum.profile.segments]
    assert grads == pytest.approx([1.0, 0.5 / 0.3])


def test_cone_closed_forms(cone):
    st_ = extremal_exact_stats(cone)
    assert st_.lq_norm(1) == pytest.approx(math.pi / 3, rel=1e-12)
    assert st_.lq_norm(2) == pytest.approx(math.sqrt(math.pi / 6), rel=1e-12)
    assert st_.grad_norm(3) == pytest.approx(math.pi ** (1 / 3), rel=1e-12)
    assert st_.lambda_C == 0.0


def test_rearranged_and_translated(frustrum):
    r = frustrum.rearranged()
    assert np.allclose(r.centers.centers, 0.0)
    moved = frustrum.translated([1.0, -2.0])
    x = np.array([0.3, 0.1])
    assert moved(x + np.array([1.0, -2.0])) == pytest.approx(frustrum(x))
    d = frustrum.dilated(2.0)
    assert d(2 * x) == pytest.approx(frustrum(x))


@given(st.floats(0.05, 0.95), st.floats(0.1, 0.9), st.floats(0.1, 0.9), st.floats(0.0, 1.0))
def test_frustrum_evaluation_is_nested(a, rho, frac, efrac):
    inner = rho * frac
    spec = family_cone_frustrum(2, a, rho, inner, efrac * (rho - inner))
    pts = np.random.default_rng(1).uniform(-1.2, 1.2, size=(500, 2))
    vals = spec(pts)
    assert np.all((vals >= 0) & (vals <= 1))
    for t in (0.5 * a, a, 0.5 * (a + 1)):
        c, r = spec.level_ball(t)
        assert np.array_equal(vals > t, np.linalg.norm(pts - c, axis=1) < r)


def test_json_roundtrip(frustrum):
    back = ExtremalSpec.from_dict(__import__("json").loads(frustrum.to_json()))
    assert back.profile == frustrum.profile
    assert np.array_equal(back.centers.centers, frustrum.centers.centers)


def test_cantor_heights():
    h = cantor_heights(2)
    assert np.allclose(h, [1 / 18, 5 / 18, 13 / 18, 17 / 18])
    assert np.all(np.diff(cantor_heights(6)) > 0)
    with pytest.raises(ValueError):
        cantor_heights(-1)


def test_devils_staircase_structure():
    spec = family_devils_staircase(2, cantor_depth=4, offset=0.5)
    st_ = extremal_exact_stats(spec)
    assert st_.sc_mass == pytest.approx(0.1 * math.pi, rel=1e-12)
    # at finite depth the Cantor masses are genuine plateaus
    assert st_.lambda_C == pytest.approx(st_.sc_mass, rel=1e-12)
    assert len(spec.centers.jump_heights()) == 16
    with pytest.raises(ValueError):
        family_devils_staircase(2, cantor_depth=21)


def test_make_family():
    assert make_family("cone", n=3).n == 3
    with pytest.raises(KeyError):
        make_family("pyramid")


def test_one_dimensional_frustrum():
    spec = family_cone_frustrum(1, 0.5, 0.5, 0.3, 0.2)
    st_ = extremal_exact_stats(spec)
    assert st_.lambda_C == pytest.approx(0.4)
    assert spec(np.array([0.2])) == pytest.approx(1.0)


def test_sample_grid_boundary(frustrum):
    g = frustrum.sample(64)
    assert g.boundary_is_zero()
    assert g.max_value <= 1.0


def test_three_dimensional_cone():
    spec = family_cone(3)
    st_ = extremal_exact_stats(spec)
    # int (1 - |x|)_+ dx over R^3 = 4 pi / 3 * 1/4
    assert st_.lq_norm(1) == pytest.approx(math.pi / 3, rel=1e-12)
    assert spec(np.array([0.0, 0.5, 0.0])) == pytest.approx(0.5)


def test_value_jump_spec_is_bv_only():
    spec = family_staircase(2, [(0.3, 1.0), (0.6, 0.7), (1.0, 0.4)])
    st_ = extremal_exact_stats(spec)
    assert st_.bv_only
    assert st_.jump_variation() == pytest.approx(2 * math.pi * (0.3 * 1.0 + 0.3 * 0.7 + 0.4 * 0.4))
