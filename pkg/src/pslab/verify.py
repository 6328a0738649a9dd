"""Left and right sides of the stability bounds, evaluated on exact extremals."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .extremal import ExtremalSpec, extremal_exact_stats, family_cone_frustrum
from .field import GridField
from .functionals import (
    YoungFunction,
    dirichlet_functional,
    levelwise_l1,
    levelwise_lq_distance,
    levelwise_psi_distance,
    young_validate,
)
from .geometry import kn_constant, ln_constant, unit_ball_volume
from .measure import center_path

HOLDS = "holds"
WITHIN = "holds-within-tolerance"
VIOLATED = "violated"


@dataclass
class BoundReport:
    bound_id: str
    params: dict
    lhs: float
    rhs: float
    tolerance: float
    vacuous: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0 else math.inf

    @property
    def verdict(self) -> str:
        if self.lhs <= self.rhs:
            return HOLDS
        if self.lhs <= self.rhs * (1 + self.tolerance):
            return WITHIN
        return VIOLATED

    @property
    def ok(self) -> bool:
        return self.verdict != VIOLATED

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ratio"] = self.ratio
        out["verdict"] = self.verdict
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=_plain)


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _report(bound_id, spec, params, lhs, rhs, tol, extra=None) -> BoundReport:
    p = {"n": spec.n, "family": spec.family, **spec.params, **params}
    vacuous = rhs == 0 and lhs == 0
    return BoundReport(bound_id, p, float(lhs), float(rhs), float(tol), vacuous, dict(extra or {}))


# -- translation and distances ----------------------------------------------------------


def optimal_translation(obj) -> np.ndarray:
    """Shift xi_inf that aligns u* with u at the top."""
    if isinstance(obj, GridField):
        return center_path(obj).xi_infinity
    return np.asarray(obj.xi_infinity, dtype=float)


def _is_centered(spec: ExtremalSpec) -> bool:
    return spec.centers.total_variation() == 0


def distance_to_rearrangement(spec: ExtremalSpec, q: float) -> tuple[float, float]:
    """||u - u* o tau||_q with an error estimate; exactly 0 when no center moves."""
    if _is_centered(spec):
        return 0.0, 0.0
    ref = spec.aligned_rearrangement()
    if q == 1:
        return levelwise_l1(spec, ref)
    return levelwise_lq_distance(spec, ref, q)


def sup_distance(spec: ExtremalSpec, resolution: int | None = None, refine: int = 8) -> float:
    """sup |u - u* o tau| by dense sampling followed by Nelder-Mead refinement."""
    if _is_centered(spec):
        return 0.0
    ref = spec.aligned_rearrangement()
    n = spec.n
    res = resolution or {1: 20001, 2: 401, 3: 61}[n]
    half = spec.extent() * 1.01
    ax = np.linspace(-half, half, res)
    pts = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    gap = np.abs(spec.evaluate(pts) - ref.evaluate(pts))
    best = float(gap.max())
    step = ax[1] - ax[0]

    def neg(x):
        return -abs(float(spec.evaluate(x)) - float(ref.evaluate(x)))

    for k in np.argsort(gap)[::-1][:refine]:
        x0 = pts[k]
        simplex = np.vstack([x0, x0 + step * np.eye(n)])
        res_ = optimize.minimize(neg, x0, method="Nelder-Mead", options={"initial_simplex": simplex, "xatol": 1e-12, "fatol": 1e-14})
        best = max(best, -float(res_.fun))
    return best


# -- theorems ----------------------------------------------------------------------------------


def verify_theorem_main(spec: ExtremalSpec, q: float = 1.0, tolerance: float = 1e-3) -> BoundReport:
    """||u - u* o tau||_q <= K_n^{1/q} ||u||_q^{1/n'} ||u X_C||_q^{1/n}."""
    if q < 1:
        raise ValueError("q must be >= 1")
    n = spec.n
    st = extremal_exact_stats(spec)
    kn = kn_constant(n)
    uq = st.lq_norm(q)
    ucq = st.uXC_norm(q)
    rhs = kn ** (1 / q) * uq ** (1 - 1 / n) * ucq ** (1 / n)
    lhs, err = distance_to_rearrangement(spec, q)
    extra = {
        "K_n": kn,
        "u_q": uq,
        "uXC_q": ucq,
        "quadrature_error": err,
        # the same bound raised to the q-th power
        "lhs_pow": lhs**q,
        "rhs_pow": kn * (uq**q) ** (1 - 1 / n) * (ucq**q) ** (1 / n),
    }
    return _report("theorem_main", spec, {"q": q}, lhs, rhs, tolerance, extra)


def _require_sobolev(spec: ExtremalSpec, what: str):
    if not spec.profile.is_sobolev:
        raise ValueError(f"{what} needs a Sobolev spec; this one has value jumps (BV only)")


def verify_theorem_finite(spec: ExtremalSpec, p: float = 2.0, tolerance: float = 1e-3) -> BoundReport:
    """||u - u* o tau||_p <= ||grad u||_p (|C| / omega_n)^{1/n}."""
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    _require_sobolev(spec, "the finite-measure bound")
    n = spec.n
    st = extremal_exact_stats(spec)
    grad = st.grad_norm(p)
    vol_radius = (st.lambda_C / unit_ball_volume(n)) ** (1 / n)
    rhs = grad * vol_radius
    lhs, err = distance_to_rearrangement(spec, p)
    extra = {"grad_p": grad, "lambda_C": st.lambda_C, "quadrature_error": err}
    return _report("theorem_finite", spec, {"p": p}, lhs, rhs, tolerance, extra)


def verify_theorem_morrey(spec: ExtremalSpec, p: float, M: float, tolerance: float = 1e-3) -> BoundReport:
    """||u - u* o tau||_inf <= M ||grad u||_p (|C| / omega_n)^{1/n - 1/p}.

    M has no default. ``extra["dimensionless_ratio"]`` is lhs divided by the
    bound without M, so the bound can be judged independently of M.
    """
    n = spec.n
    if not p > n:
        raise ValueError("p must exceed the dimension")
    if M is None or not M > 0:
        raise ValueError("a positive Morrey constant M is required")
    _require_sobolev(spec, "the Morrey bound")
    st = extremal_exact_stats(spec)
    grad = st.grad_norm(p)
    scale = grad * (st.lambda_C / unit_ball_volume(n)) ** (1 / n - 1 / p)
    lhs = sup_distance(spec)
    rhs = M * scale
    dimless = lhs / scale if scale > 0 else (0.0 if lhs == 0 else math.inf)
    extra = {"grad_p": grad, "lambda_C": st.lambda_C, "M": M, "dimensionless_ratio": dimless}
    return _report("theorem_morrey", spec, {"p": p}, lhs, rhs, tolerance, extra)


def verify_cf_bound(spec: ExtremalSpec, p: float = 2.0, tolerance: float = 1e-3) -> BoundReport:
    """||u - u* o tau||_1 <= L_n ||grad u||_p |supp u|^{1/p' + (2n-1)/2n^2} |C|^{1/2n^2}.

    ``extra["theorem_finite_rhs_l1"]`` converts the finite-measure bound to L1
    by Hoelder on supp(u) union supp(u* o tau), so the two right sides can be
    compared in the same norm.
    """
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    _require_sobolev(spec, "the Cianchi-Fusco bound")
    n = spec.n
    st = extremal_exact_stats(spec)
    grad = st.grad_norm(p)
    supp = st.support_measure
    p_dual = p / (p - 1)
    rhs = ln_constant(n, p) * grad * supp ** (1 / p_dual + (2 * n - 1) / (2 * n * n)) * st.lambda_C ** (1 / (2 * n * n))
    lhs, err = distance_to_rearrangement(spec, 1.0)
    t2 = grad * (st.lambda_C / unit_ball_volume(n)) ** (1 / n)
    t2_l1 = (2 * supp) ** (1 / p_dual) * t2
    extra = {
        "L_n": ln_constant(n, p),
        "grad_p": grad,
        "support_measure": supp,
        "lambda_C": st.lambda_C,
        "theorem_finite_rhs": t2,
        "theorem_finite_rhs_l1": t2_l1,
        "sharper_than_cf": bool(t2_l1 <= rhs * (1 + 1e-12)),
        "quadrature_error": err,
    }
    return _report("cianchi_fusco", spec, {"p": p}, lhs, rhs, tolerance, extra)


def density_sup(spec: ExtremalSpec) -> float:
    """sup over 0 < t < ess sup u of |C intersected with {u > t}| / |{u > t}|.

    F^s is constant and F decreases between plateau heights, so the sup is
    attained as t increases to a plateau height.
    """
    st = extremal_exact_stats(spec)
    best = 0.0
    for h, _ in st.jump_masses:
        num = sum(m for hh, m in st.jump_masses if hh >= h)
        den = float(spec.profile.F_left(h))
        if den > 0:
            best = max(best, num / den)
    return best


def verify_density_bound(spec: ExtremalSpec, q: float = 1.0, tolerance: float = 1e-3) -> BoundReport:
    """||u - u* o tau||_q^q / ||u||_q^q <= K_n sup_t (|C cap {u>t}| / |{u>t}|)^{1/n}."""
    if q < 1:
        raise ValueError("q must be >= 1")
    n = spec.n
    st = extremal_exact_stats(spec)
    dist, err = distance_to_rearrangement(spec, q)
    uq = st.lq_norm(q)
    lhs = dist**q / uq**q
    dens = density_sup(spec)
    rhs = kn_constant(n) * dens ** (1 / n)
    extra = {"density_sup": dens, "quadrature_error": err}
    return _report("density_ratio", spec, {"q": q}, lhs, rhs, tolerance, extra)


def coarea_form_bound(spec: ExtremalSpec, q: float = 1.0, tolerance: float = 1e-3) -> BoundReport:
    """||u - u* o tau||_q^q <= K_n int F^s(u)^{1/n} |grad u^q| dx, by the coarea formula."""
    _require_sobolev(spec, "the coarea-form bound")
    from .functionals import integrate_piecewise

    n = spec.n
    st = extremal_exact_stats(spec)
    w = unit_ball_volume(n)

    def integrand(t):
        fs = np.asarray(st.F_s(t), dtype=float)
        per = n * w * np.asarray(spec.profile.radius(t), dtype=float) ** (n - 1)
        return np.maximum(fs, 0.0) ** (1 / n) * q * t ** (q - 1) * per

    rhs_int, _ = integrate_piecewise(integrand, spec.profile.knots)
    rhs = kn_constant(n) * rhs_int
    dist, err = distance_to_rearrangement(spec, q)
    return _report("coarea_form", spec, {"q": q}, dist**q, rhs, tolerance, {"quadrature_error": err})


# -- corollaries ---------------------------------------------------------------------------------


def verify_corollary_young(spec: ExtremalSpec, phi, psi, tolerance: float = 1e-3) -> BoundReport:
    """int Psi(|u - u* o tau|) <= K_n (int Psi(u))^{1/n'} (int_{C_Phi} Psi(u))^{1/n}.

    C_Phi adds to the plateaus every sloped annulus whose gradient lies in the
    affine set V of Phi.
    """
    phi = young_validate(phi)
    psi = young_validate(psi)
    if not phi.strictly_increasing:
        raise ValueError("Phi must be strictly increasing")
    dirichlet_functional(spec, phi)  # raises when infinite
    n = spec.n
    st = extremal_exact_stats(spec)
    V = phi.affine_set
    segs = st.affine_segments(V)
    total = st.psi_integral(psi)
    on_c = st.integral_of(psi, segments=set(segs), plateaus=True, top=False)
    rhs = kn_constant(n) * total ** (1 - 1 / n) * on_c ** (1 / n)
    if _is_centered(spec):
        lhs, err = 0.0, 0.0
    else:
        lhs, err = levelwise_psi_distance(spec, spec.aligned_rearrangement(), psi)
    extra = {
        "lambda_C": st.lambda_C,
        "lambda_C_phi": st.lambda_C_phi(V),
        "affine_segments": segs,
        "psi_u": total,
        "psi_u_on_C_phi": on_c,
        "quadrature_error": err,
    }
    params = {"phi": phi.to_config(), "psi": psi.to_config()}
    return _report("corollary_young", spec, params, lhs, rhs, tolerance, extra)


def verify_corollary_finite(spec: ExtremalSpec, phi, tolerance: float = 1e-3) -> BoundReport:
    """int Phi(|u - u* o tau| (|C_Phi| / omega_n)^{-1/n}) dx <= F(u).

    Also checks the intermediate step int Psi(|u - u* o tau|) <= int Psi(|grad u| |D xi|)
    with Psi(t) = Phi(t / |D xi|), whose right side is int Phi(|grad u|).
    """
    phi = young_validate(phi)
    n = spec.n
    st = extremal_exact_stats(spec)
    lam = st.lambda_C_phi(phi.affine_set)
    rhs = dirichlet_functional(spec, phi)
    params = {"phi": phi.to_config()}
    if lam == 0:
        # no plateaus, so the builder kept the centers fixed and u = u* o tau
        rep = _report("corollary_finite", spec, params, 0.0, rhs, tolerance, {"lambda_C_phi": 0.0, "degenerate": True})
        rep.vacuous = True
        return rep
    c = (lam / unit_ball_volume(n)) ** (1 / n)
    tv = spec.centers.total_variation()
    if _is_centered(spec):
        lhs, err, lhs2 = 0.0, 0.0, 0.0
    else:
        ref = spec.aligned_rearrangement()
        lhs, err = levelwise_psi_distance(spec, ref, phi.scaled(c))
        lhs2, _ = levelwise_psi_distance(spec, ref, phi.scaled(tv))
    ac_part = sum(float(phi(st.gradient_on(s))) * st.annulus_mass(s) for s in spec.profile.segments if not s.flat)
    extra = {
        "lambda_C_phi": lam,
        "volume_radius": c,
        "center_variation": tv,
        "psi2_lhs": lhs2,
        "psi2_rhs": ac_part,
        "psi2_holds": bool(lhs2 <= ac_part * (1 + tolerance)),
        "quadrature_error": err,
    }
    return _report("corollary_finite", spec, params, lhs, rhs, tolerance, extra)


# -- center variation -------------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float  # largest violation margin (<= 0 when passed)
    count: int
    details: dict = field(default_factory=dict)


def check_var_xi(spec: ExtremalSpec, rng: np.random.Generator, pairs: int = 100) -> CheckResult:
    """|xi_s - xi_t| <= (mu^s((s, t]) / omega_n)^{1/n} on random 0 < s < t < top."""
    top = spec.top_height
    dec = spec.decomposition()
    w = unit_ball_volume(spec.n)
    st = np.sort(rng.uniform(0, top, size=(pairs, 2)), axis=1)
    worst = -math.inf
    for s, t in st:
        if not 0 < s < t:
            continue
        lhs = float(np.linalg.norm(spec.centers.at(s) - spec.centers.at(t)))
        rhs = (dec.mu_s(s, t) / w) ** (1 / spec.n)
        worst = max(worst, lhs - rhs)
    return CheckResult("var_xi", worst <= 0, worst, pairs)


def check_total_variation(spec: ExtremalSpec) -> CheckResult:
    """|D xi| <= |D^s r| <= (|C| / omega_n)^{1/n}, where |D^s r| sums the radius jumps."""
    tv = spec.centers.total_variation()
    jumps = sum(rl - rr for _, rl, rr in spec.profile.jumps())
    st = extremal_exact_stats(spec)
    vol = (st.lambda_C / unit_ball_volume(spec.n)) ** (1 / spec.n)
    worst = max(tv - jumps, tv - vol)
    return CheckResult("tv_xi", worst <= 1e-12, worst, 1, {"tv": tv, "radius_jumps": jumps, "volume_radius": vol})


def check_xi_phi(spec: ExtremalSpec, s: float | None = None, t: float | None = None) -> CheckResult:
    """|xi_s - xi_t| = |R(x) - R(y)| - |x - y| at the collinear extreme boundary points.

    Needs a spec with exactly one center jump; s and t default to the middles
    of the sloped segments below and above it.
    """
    heights = spec.centers.jump_heights()
    if len(heights) != 1:
        raise ValueError("needs exactly one center jump")
    a = heights[0]
    segs = spec.profile.segments
    if s is None:
        below = [g for g in segs if g.t1 <= a and not g.flat]
        s = 0.5 * (below[-1].t0 + below[-1].t1)
    if t is None:
        above = [g for g in segs if g.t0 >= a and not g.flat]
        t = 0.5 * (above[0].t0 + above[0].t1)
    xs, xt = spec.centers.at(s), spec.centers.at(t)
    d = float(np.linalg.norm(xt - xs))
    e = (xt - xs) / d
    x = xs + spec.profile.radius(s) * e
    y = xt + spec.profile.radius(t) * e
    rx, ry = float(spec.radius_at(x)), float(spec.radius_at(y))
    rhs = abs(rx - ry) - float(np.linalg.norm(x - y))
    err = abs(d - rhs)
    return CheckResult("xi_phi", err <= 1e-9, err, 1, {"lhs": d, "rhs": rhs, "s": s, "t": t})


def check_lip(spec: ExtremalSpec, rng: np.random.Generator, pairs: int = 10_000) -> CheckResult:
    """|R(x) - R(y)| <= |x - y| + (mu^s((u(x), u(y)]) / omega_n)^{1/n} for u(x) < u(y).

    Points are drawn from the support with 0 < u < ess sup u: on the top
    plateau R vanishes and the inequality is not meant to apply there.
    """
    n = spec.n
    w = unit_ball_volume(n)
    dec = spec.decomposition()
    top = spec.top_height
    half = spec.extent()
    pts = []
    while sum(len(p) for p in pts) < 2 * pairs:
        cand = rng.uniform(-half, half, size=(4 * pairs, n))
        val = spec.evaluate(cand)
        pts.append(cand[(val > 0) & (val < top)])
    pts = np.concatenate(pts)[: 2 * pairs]
    x, y = pts[:pairs], pts[pairs:]
    ux, uy = spec.evaluate(x), spec.evaluate(y)
    swap = ux > uy
    x[swap], y[swap] = y[swap].copy(), x[swap].copy()
    ux, uy = np.minimum(ux, uy), np.maximum(ux, uy)
    rx, ry = spec.radius_at(x), spec.radius_at(y)
    heights = np.array(dec.S)
    masses = np.array([m for _, m in sorted(list(dec.jumps) + list(zip(dec.sc_heights, dec.sc_masses)))])
    if heights.size:
        cum = np.concatenate([[0.0], np.cumsum(masses)])
        mu = cum[np.searchsorted(heights, uy, side="right")] - cum[np.searchsorted(heights, ux, side="right")]
    else:
        mu = np.zeros(pairs)
    margin = np.abs(rx - ry) - np.linalg.norm(x - y, axis=1) - (mu / w) ** (1 / n)
    worst = float(margin.max())
    return CheckResult("lip", worst <= 1e-12, worst, pairs)


def singular_radius_variation(spec: ExtremalSpec) -> dict:
    """|D^s R| for R(x) = r(u(x)) against mu^s((0, top)) + inf_{t < top} F(t).

    R jumps by r(a-) - r(a) across the outer sphere (radius r(a-)) of every
    plateau, so |D^s R| = sum (r(a-) - r(a)) n omega_n r(a-)^{n-1}. This
    equals mu^s in 1D and exceeds it in higher dimensions.
    """
    n = spec.n
    w = unit_ball_volume(n)
    jv = sum((rl - rr) * n * w * rl ** (n - 1) for _, rl, rr in spec.profile.jumps())
    st = extremal_exact_stats(spec)
    inf_f = st.top_plateau_mass
    bound = st.lambda_C + inf_f
    return {"DsR": jv, "bound": bound, "holds": jv <= bound * (1 + 1e-12)}


# -- sweeps ---------------------------------------------------------------------------------------


def frustrum_grid(
    a_values=(0.3, 0.5, 0.7), ratios=(0.4, 0.6, 0.8), rho: float = 0.5, steps: int = 5, n: int = 2
) -> list[dict]:
    """Cone-frustrum parameters: |e| runs from 0 to rho - rho' in ``steps`` values."""
    out = []
    for a, ratio in itertools.product(a_values, ratios):
        inner = rho * ratio
        for e in np.linspace(0.0, rho - inner, steps):
            out.append({"n": n, "a": float(a), "rho": rho, "rho_inner": float(inner), "e": float(e)})
    return out


def frustrum_from(params: dict) -> ExtremalSpec:
    return family_cone_frustrum(params["n"], params["a"], params["rho"], params["rho_inner"], params["e"])


BOUNDS = {
    "theorem_main": lambda spec, x, **kw: verify_theorem_main(spec, q=x, **kw),
    "theorem_finite": lambda spec, x, **kw: verify_theorem_finite(spec, p=x, **kw),
    "cianchi_fusco": lambda spec, x, **kw: verify_cf_bound(spec, p=x, **kw),
    "density_ratio": lambda spec, x, **kw: verify_density_bound(spec, q=x, **kw),
    "coarea_form": lambda spec, x, **kw: coarea_form_bound(spec, q=x, **kw),
}


def run_bound(bound_id: str, spec: ExtremalSpec, exponent: float, **kw) -> BoundReport:
    if bound_id == "theorem_morrey":
        return verify_theorem_morrey(spec, p=exponent, **kw)
    if bound_id not in BOUNDS:
        raise KeyError(f"unknown bound {bound_id!r}")
    return BOUNDS[bound_id](spec, exponent, **kw)


def default_reports(spec: ExtremalSpec, p: float = 2.0, q: float = 1.0, morrey_p: float = 4.0, M: float = 1.0, tolerance: float = 1e-3) -> list[BoundReport]:
    """The seven headline reports for one Sobolev spec."""
    phi2 = YoungFunction.power(2)
    return [
        verify_theorem_main(spec, q, tolerance),
        verify_theorem_finite(spec, p, tolerance),
        verify_theorem_morrey(spec, morrey_p, M, tolerance),
        verify_cf_bound(spec, p, tolerance),
        verify_density_bound(spec, q, tolerance),
        verify_corollary_young(spec, phi2, YoungFunction.power(q), tolerance),
        verify_corollary_finite(spec, phi2, tolerance),
    ]
