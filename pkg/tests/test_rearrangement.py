import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pslab.field import field_from_function, gradient_norm_lp, lq_norm, random_bumps
from pslab.functionals import YoungFunction, dirichlet_functional
from pslab.rearrangement import (
    RadialProfile,
    Segment,
    SliceMap,
    approximation_intervals,
    rearrange,
    rearrange_profile,
    slice_removal,
)
from pslab.distribution import empirical_distfn


def test_rearrange_is_equimeasurable(rng):
    f = random_bumps(rng, resolution=128)
    r = rearrange(f)
    assert np.array_equal(np.sort(f.values.ravel()), np.sort(r.values.ravel()))
    assert r.boundary_is_zero()


def test_rearrange_is_radially_decreasing(rng):
    r = rearrange(random_bumps(rng, resolution=96))
    pts = r.points()
    d = np.linalg.norm(pts, axis=1)
    order = np.argsort(d, kind="stable")
    vals = r.values.ravel()[order]
    ds = d[order]
    # strictly larger distance never carries a larger value
    assert np.all(np.diff(vals)[np.diff(ds) > 1e-12] <= 0)


def test_rearrange_idempotent_up_to_ties(cone_grid):
    once = rearrange(cone_grid)
    twice = rearrange(once)
    assert np.array_equal(once.values, twice.values)


def test_symmetric_cone_matches_itself(cone_grid):
    # ties in |x| can swap cells, so allow at most two cell layers of discrepancy
    r = rearrange(cone_grid)
    diff = np.sum(np.abs(r.values - cone_grid.values)) * cone_grid.cell_volume
    layer = 2 * math.pi * 1.0 * cone_grid.spacing * cone_grid.spacing
    assert diff <= 2 * layer


def test_rearrange_speed(rng):
    f = random_bumps(rng, resolution=256)
    t0 = time.perf_counter()
    rearrange(f)
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_discrete_polya_szego(rng, p):
    for _ in range(5):
        f = random_bumps(rng, resolution=128)
        assert gradient_norm_lp(rearrange(f), p) <= 1.02 * gradient_norm_lp(f, p)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, 3.0]))
def test_lq_norm_preserved(seed, q):
    f = random_bumps(np.random.default_rng(seed), resolution=48)
    assert lq_norm(rearrange(f), q) == pytest.approx(lq_norm(f, q), rel=1e-12)


def test_1d_rearrangement():
    f = field_from_function(lambda p: np.maximum(0.5 - np.abs(p[:, 0] - 0.3), 0.0), [(-1, 1)], 200)
    r = rearrange(f)
    assert r.values[np.argmin(np.abs(r.axes()[0]))] == pytest.approx(f.max_value)
    assert np.sum(r.values) == pytest.approx(np.sum(f.values))


def test_profile_radius_and_F():
    prof = RadialProfile(2, (Segment(0.0, 1.0, 1.0, 0.0),))
    assert prof.radius(0.5) == pytest.approx(0.5)
    assert prof.F(0.5) == pytest.approx(math.pi * 0.25)
    assert prof.is_sobolev
    assert prof.top_height == 1.0


def test_profile_jump_and_left_limit():
    prof = RadialProfile.from_breakpoints(2, [(0.0, 1.0, 1.0), (0.5, 0.5, 0.3), (1.0, 0.0, 0.0)])
    # a radius jump is a plateau, which keeps u Sobolev
    assert prof.is_sobolev
    assert prof.radius(0.5) == pytest.approx(0.3)
    assert prof.radius_left(0.5) == pytest.approx(0.5)
    (h, m), = prof.jump_masses()
    assert h == 0.5
    assert m == pytest.approx(math.pi * (0.25 - 0.09))


def test_flat_segment_is_value_jump():
    prof = RadialProfile(2, (Segment(0.0, 0.5, 1.0, 0.5), Segment(0.5, 0.8, 0.5, 0.5), Segment(0.8, 1.0, 0.5, 0.0)))
    assert not prof.is_sobolev


def test_profile_roundtrip():
    prof = RadialProfile.from_breakpoints(3, [(0.0, 2.0, 2.0), (0.4, 1.0, 1.0), (1.0, 0.5, 0.0)])
    assert RadialProfile.from_dict(prof.to_dict()) == prof


def test_profile_from_empirical_distfn(cone_grid):
    prof = rearrange_profile(empirical_distfn(cone_grid.values, cone_grid.cell_volume, 2))
    assert prof.radius(0.5) == pytest.approx(0.5, abs=2 * cone_grid.spacing)


def test_slicemap_examples():
    f = SliceMap([(0.2, 0.3), (0.5, 0.6)])
    assert f(0.1) == pytest.approx(0.1)
    assert f(0.25) == pytest.approx(0.2)
    assert f(0.4) == pytest.approx(0.3)
    assert f(1.0) == pytest.approx(0.8)
    assert f.kept(1.0) == [(0.0, 0.2), (0.3, 0.5), (0.6, 1.0)]
    with pytest.raises(ValueError):
        SliceMap([(0.3, 0.2)])
    with pytest.raises(ValueError):
        SliceMap([(0.1, 0.3), (0.2, 0.4)])


@given(st.lists(st.floats(0.0, 2.0), min_size=2, max_size=10), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_slicemap_is_1_lipschitz_nondecreasing(ends, s, t):
    ends = sorted(set(ends))
    ivs = [(a, b) for a, b in zip(ends[::2], ends[1::2]) if b > a]
    f = SliceMap(ivs)
    lo, hi = min(s, t), max(s, t)
    assert -1e-12 <= f(hi) - f(lo) <= hi - lo + 1e-12


def test_slice_removal_on_profile_and_grid(cone_grid):
    prof = RadialProfile(2, (Segment(0.0, 1.0, 1.0, 0.0),))
    cut = slice_removal(prof, [(0.4, 0.6)])
    assert cut.top_height == pytest.approx(0.8)
    assert cut.radius(0.3) == pytest.approx(0.7)
    assert cut.radius(0.5) == pytest.approx(0.3)
    g = slice_removal(cone_grid, [(0.4, 0.6)])
    assert g.max_value == pytest.approx(cone_grid.max_value - 0.2, abs=1e-12)


def test_slicing_never_increases_dirichlet():
    prof = RadialProfile.from_breakpoints(2, [(0.0, 1.0, 1.0), (0.5, 0.5, 0.5), (1.0, 0.0, 0.0)])
    from pslab.extremal import build_extremal
    from pslab.measure import CenterPath

    spec = build_extremal(prof, CenterPath.constant((0.0, 0.0)))
    phi = YoungFunction.power(2)
    cut = spec.sliced(SliceMap([(0.1, 0.2)]))
    assert dirichlet_functional(cut, phi) <= dirichlet_functional(spec, phi) + 1e-12


def test_approximation_intervals_nested():
    hs = [0.2, 0.25, 0.7]
    prev = None
    for m in range(1, 8):
        ivs = approximation_intervals(hs, m)
        assert sum(b - a for a, b in ivs) <= 2.0**-m + 1e-15
        for h in hs:
            assert any(a < h < b for a, b in ivs)
        if prev is not None:
            for a, b in ivs:
                assert any(pa <= a and b <= pb for pa, pb in prev)
        prev = ivs
    with pytest.raises(ValueError):
        approximation_intervals(hs, 0)
