import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pslab.extremal import family_cone, family_cone_frustrum, family_devils_staircase, family_staircase
from pslab.functionals import YoungFunction, psi_distance, young_validate
from pslab.geometry import kn_constant
from pslab.verify import (
    BoundReport,
    check_lip,
    check_total_variation,
    check_var_xi,
    check_xi_phi,
    coarea_form_bound,
    default_reports,
    density_sup,
    distance_to_rearrangement,
    frustrum_grid,
    optimal_translation,
    singular_radius_variation,
    sup_distance,
    verify_cf_bound,
    verify_corollary_finite,
    verify_corollary_young,
    verify_density_bound,
    verify_theorem_finite,
    verify_theorem_main,
    verify_theorem_morrey,
)


def test_report_verdicts():
    assert BoundReport("x", {}, 1.0, 2.0, 1e-3).verdict == "holds"
    assert BoundReport("x", {}, 1.0005, 1.0, 1e-3).verdict == "holds-within-tolerance"
    assert BoundReport("x", {}, 1.1, 1.0, 1e-3).verdict == "violated"
    assert not BoundReport("x", {}, 1.1, 1.0, 1e-3).ok
    assert BoundReport("x", {}, 0.0, 0.0, 1e-3).ratio == 0.0
    assert BoundReport("x", {}, 1.0, 0.0, 1e-3).ratio == math.inf


def test_report_json(frustrum):
    rep = verify_theorem_main(frustrum)
    data = json.loads(rep.to_json())
    assert data["bound_id"] == "theorem_main"
    assert data["verdict"] == "holds"
    assert data["params"]["q"] == 1.0


def test_theorem_main_documented_instance(frustrum):
    rep = verify_theorem_main(frustrum, q=1)
    # K_2 (pi/3 + ...)^{1/2} (0.08 pi)^{1/2} with exact pieces
    st_u = rep.extra["u_q"]
    expected = kn_constant(2) * math.sqrt(st_u) * math.sqrt(0.08 * math.pi)
    assert rep.rhs == pytest.approx(expected, rel=1e-12)
    assert rep.rhs == pytest.approx(0.6266, rel=5e-3)
    assert rep.lhs < rep.rhs / 2
    assert rep.extra["lhs_pow"] <= rep.extra["rhs_pow"]


def test_distance_against_dense_grid(frustrum):
    lhs, err = distance_to_rearrangement(frustrum, 1.0)
    ref = frustrum.aligned_rearrangement()
    assert lhs == pytest.approx(psi_distance(frustrum, ref, YoungFunction.power(1)), rel=1e-4)
    assert err < 1e-8


def test_degenerate_specs_have_zero_distance(cone):
    assert distance_to_rearrangement(cone, 1.0) == (0.0, 0.0)
    centered = family_cone_frustrum(2, 0.5, 0.5, 0.3, 0.0)
    assert distance_to_rearrangement(centered, 2.0) == (0.0, 0.0)
    assert sup_distance(centered) == 0.0
    rep = verify_theorem_main(cone)
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.vacuous


def test_sup_distance_equals_offset():
    for e in (0.05, 0.1, 0.2):
        spec = family_cone_frustrum(2, 0.5, 0.5, 0.3, e)
        assert sup_distance(spec) == pytest.approx(e, rel=1e-6)


def test_optimal_translation(frustrum):
    assert np.allclose(optimal_translation(frustrum), [0.2, 0.0])
    g = frustrum.sample(256)
    assert np.allclose(optimal_translation(g), [0.2, 0.0], atol=0.02)


def test_theorem_finite_and_cf(frustrum):
    for p in (1.5, 2.0, 4.0):
        t2 = verify_theorem_finite(frustrum, p)
        cf = verify_cf_bound(frustrum, p)
        assert t2.ok and cf.ok
        assert cf.extra["sharper_than_cf"]
        assert cf.extra["theorem_finite_rhs"] == pytest.approx(t2.rhs)
    with pytest.raises(ValueError):
        verify_theorem_finite(frustrum, 1.0)


def test_bv_spec_rejected_by_sobolev_bounds():
    stair = family_staircase(2, [(0.5, 1.0), (1.0, 0.5)], centers=[0.0, 0.3])
    with pytest.raises(ValueError, match="Sobolev"):
        verify_theorem_finite(stair, 2.0)
    # the main bound has no gradient and applies to BV functions
    assert verify_theorem_main(stair).ok


def test_morrey_requires_constant(frustrum):
    with pytest.raises(ValueError, match="Morrey constant"):
        verify_theorem_morrey(frustrum, 4.0, None)
    with pytest.raises(ValueError, match="exceed"):
        verify_theorem_morrey(frustrum, 2.0, 1.0)
    rep = verify_theorem_morrey(frustrum, 4.0, 1.0)
    assert rep.lhs == pytest.approx(0.2, rel=1e-6)
    assert rep.extra["dimensionless_ratio"] == pytest.approx(rep.lhs / (rep.rhs / 1.0))


def test_density_bound(frustrum):
    # sup of |C cap {u>t}| / |{u>t}| is reached as t -> a-: 0.16 pi / (0.25 pi)
    assert density_sup(frustrum) == pytest.approx(0.64)
    rep = verify_density_bound(frustrum)
    assert rep.ok
    assert rep.rhs == pytest.approx(kn_constant(2) * 0.8)


def test_coarea_form_is_looser(frustrum):
    main = verify_theorem_main(frustrum)
    co = coarea_form_bound(frustrum)
    assert co.ok
    assert co.lhs == pytest.approx(main.lhs)


def test_corollary_young_reduces_to_main(frustrum):
    cy = verify_corollary_young(frustrum, YoungFunction.power(2), YoungFunction.power(1))
    main = verify_theorem_main(frustrum, 1.0)
    assert cy.rhs == pytest.approx(main.rhs, rel=1e-9, abs=0)
    assert cy.lhs == pytest.approx(main.lhs, rel=1e-9)
    assert cy.extra["lambda_C_phi"] == pytest.approx(cy.extra["lambda_C"])


def test_corollary_young_affine_phi_enlarges_critical_set(frustrum):
    # Phi is affine around |grad u| = 1 (lower annulus) and curved around 5/3 (top cone)
    b = 5 / 3
    pts = [[0, 0], [0.5, 0.25], [b, 0.25 + (b - 0.5)], [3, 0.25 + (b - 0.5) + 2 * (3 - b)]]
    phi = young_validate({"breakpoints": pts, "smooth": 0.2})
    rep = verify_corollary_young(frustrum, phi, YoungFunction.power(1))
    assert rep.extra["lambda_C_phi"] > rep.extra["lambda_C"]
    assert rep.extra["affine_segments"] == [0]
    assert rep.ok
    with pytest.raises(ValueError, match="strictly increasing"):
        verify_corollary_young(frustrum, young_validate({"breakpoints": [[0, 0], [1, 0], [2, 1]]}), YoungFunction.power(1))


def test_corollary_finite(frustrum):
    rep = verify_corollary_finite(frustrum, YoungFunction.power(2))
    assert rep.ok and not rep.vacuous
    assert rep.extra["psi2_holds"]
    lin = verify_corollary_finite(frustrum, YoungFunction.power(1))
    # Phi = t: C_Phi is the whole support, so the scale is 1
    assert lin.extra["lambda_C_phi"] == pytest.approx(math.pi)
    assert lin.lhs == pytest.approx(distance_to_rearrangement(frustrum, 1.0)[0], rel=1e-9)


def test_corollary_finite_vacuous(cone):
    rep = verify_corollary_finite(cone, YoungFunction.power(2))
    assert rep.vacuous and rep.lhs == 0.0


def test_center_checks(frustrum, rng):
    assert check_var_xi(frustrum, rng).passed
    tv = check_total_variation(frustrum)
    assert tv.passed
    assert tv.details["tv"] == pytest.approx(0.2)
    assert tv.details["volume_radius"] == pytest.approx(0.4)
    xi = check_xi_phi(frustrum)
    assert xi.worst <= 1e-9
    assert check_lip(frustrum, rng, pairs=2000).passed


def test_xi_phi_requires_single_jump(cone):
    with pytest.raises(ValueError):
        check_xi_phi(cone)


def test_center_checks_devils_staircase(rng):
    spec = family_devils_staircase(2, cantor_depth=5, offset=1.0)
    assert check_var_xi(spec, rng).passed
    assert check_total_variation(spec).passed
    assert check_lip(spec, rng, pairs=2000).passed


def test_singular_radius_variation():
    # in 1D the jump of R equals the singular mass
    one = singular_radius_variation(family_cone_frustrum(1, 0.5, 0.5, 0.3, 0.2))
    assert one["DsR"] == pytest.approx(0.4)
    two = singular_radius_variation(family_cone_frustrum(2, 0.5, 0.5, 0.3, 0.2))
    # jump across the circle of radius 0.5: 0.2 * 2 pi * 0.5
    assert two["DsR"] == pytest.approx(0.2 * math.pi)
    assert not two["holds"]


def test_frustrum_grid_shape():
    grid = frustrum_grid()
    assert len(grid) == 45
    assert all(g["e"] <= g["rho"] - g["rho_inner"] + 1e-12 for g in grid)


def test_default_reports_all_hold(frustrum):
    reps = default_reports(frustrum)
    assert len(reps) == 7
    assert all(r.ok for r in reps)


@settings(max_examples=25)
@given(st.floats(0.2, 0.8), st.floats(0.2, 0.9), st.floats(0.0, 1.0), st.sampled_from([1.0, 2.0]))
def test_theorem_main_holds_randomly(a, frac, efrac, q):
    rho = 0.5
    inner = rho * frac
    spec = family_cone_frustrum(2, a, rho, inner, efrac * (rho - inner))
    assert verify_theorem_main(spec, q).ok


def test_three_dimensional_frustrum_bounds():
    spec = family_cone_frustrum(3, 0.5, 0.5, 0.3, 0.1)
    assert verify_theorem_main(spec).ok
    assert verify_theorem_finite(spec, 2.0).ok
    assert family_cone(3).n == 3
