"""Exact extremals built from a radial profile and a path of level-set centers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .field import GridField, field_from_function
from .measure import CenterPath, MeasureDecomposition, decompose
from .rearrangement import RadialProfile, Segment, SliceMap, slice_profile

NEST_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ExtremalSpec:
    """u(x) = sup{t : |x - xi_t| < r(t)} for nested balls B(xi_t, r(t))."""

    profile: RadialProfile
    centers: CenterPath
    family: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.profile.n

    @property
    def top_height(self) -> float:
        return self.profile.top_height

    @property
    def xi_infinity(self) -> np.ndarray:
        return self.centers.xi_infinity

    # -- evaluation --------------------------------------------------------
    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = pts.reshape(-1, self.n)
        segs = self.profile.segments
        out = np.zeros(len(pts))
        if not segs:
            return out[0] if single else out
        t0 = np.array([s.t0 for s in segs])
        t1 = np.array([s.t1 for s in segs])
        r0 = np.array([s.r0 for s in segs])
        r1 = np.array([s.r1 for s in segs])
        cen = self.centers.at(t0)
        # nested balls: |x - c_k| < r0_k holds for an initial run of k; bisect for its end
        lo = np.full(len(pts), -1)
        hi = np.full(len(pts), len(segs))
        while np.any(hi - lo > 1):
            mid = (lo + hi) // 2
            active = hi - lo > 1
            d = np.linalg.norm(pts - cen[np.clip(mid, 0, len(segs) - 1)], axis=1)
            ok = d < r0[np.clip(mid, 0, len(segs) - 1)]
            lo = np.where(active & ok, mid, lo)
            hi = np.where(active & ~ok, mid, hi)
        has = lo >= 0
        k = lo[has]
        d = np.linalg.norm(pts[has] - cen[k], axis=1)
        full = d < r1[k]
        denom = np.where(r0[k] > r1[k], r0[k] - r1[k], 1.0)
        partial = t0[k] + (r0[k] - d) / denom * (t1[k] - t0[k])
        out[has] = np.where(full, t1[k], partial)
        return out[0] if single else out

    __call__ = evaluate

    def radius_at(self, points) -> np.ndarray:
        """R(x) = (F(u(x)) / omega_n)^{1/n}."""
        return self.profile.radius(self.evaluate(points))

    def level_ball(self, t):
        t = np.asarray(t, dtype=float)
        return self.centers.at(t), self.profile.radius(t)

    def extent(self) -> float:
        """Radius of an origin-centered ball containing the support."""
        if not self.profile.segments:
            return 0.0
        r = max(s.r0 for s in self.profile.segments)
        return float(np.max(np.linalg.norm(self.centers.centers, axis=1)) + r)

    # -- derived specs -------------------------------------------------------
    def _with(self, profile=None, centers=None, family=None) -> "ExtremalSpec":
        return build_extremal(
            profile if profile is not None else self.profile,
            centers if centers is not None else self.centers,
            family=family or self.family,
            params=self.params,
        )

    def rearranged(self) -> "ExtremalSpec":
        """u*: the same profile with all centers at the origin."""
        return self._with(centers=CenterPath.constant(np.zeros(self.n)), family=self.family + "*")

    def aligned_rearrangement(self) -> "ExtremalSpec":
        """u* composed with the translation that matches the top level set."""
        return self._with(centers=CenterPath.constant(self.xi_infinity), family=self.family + "*tau")

    def translated(self, shift) -> "ExtremalSpec":
        shift = np.asarray(shift, dtype=float)
        c = self.centers
        return self._with(centers=CenterPath(c.heights, c.centers + shift, c.xi_infinity + shift))

    def dilated(self, lam: float) -> "ExtremalSpec":
        """u(x / lam)."""
        c = self.centers
        return self._with(
            profile=self.profile.scaled(radius_factor=lam),
            centers=CenterPath(c.heights, c.centers * lam, c.xi_infinity * lam),
        )

    def sliced(self, smap: SliceMap) -> "ExtremalSpec":
        prof, origins = slice_profile(self.profile, smap)
        if not prof.segments:
            return build_extremal(prof, CenterPath.constant(np.zeros(self.n)), family=self.family + "|sliced")
        heights = np.array([s.t0 for s in prof.segments])
        cen = self.centers.at(np.array(origins))
        keep = np.concatenate([[True], np.any(np.diff(cen, axis=0) != 0, axis=1)])
        path = CenterPath(heights[keep], cen[keep], cen[-1])
        return build_extremal(prof, path, family=self.family + "|sliced", params=self.params)

    # -- measure-theoretic data -------------------------------------------------
    def distfn(self, thresholds=None, count: int = 512):
        return self.profile.distfn(thresholds, count=count)

    def decomposition(self, thresholds=None, count: int = 512) -> MeasureDecomposition:
        return decompose(self.distfn(thresholds, count=count))

    def sample(self, resolution: int = 256, margin: float = 0.1) -> GridField:
        """Cell-center samples on an origin-centered cube that clears the support."""
        half = self.extent() * (1.0 + margin) + 1e-9
        return field_from_function(self.evaluate, [(-half, half)] * self.n, resolution)

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "family": self.family,
            "params": self.params,
            "profile": self.profile.to_dict(),
            "centers": self.centers.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=_jsonable)

    @classmethod
    def from_dict(cls, data: dict) -> "ExtremalSpec":
        prof = RadialProfile.from_dict(data["profile"])
        c = data["centers"]
        path = CenterPath(np.array(c["heights"]), np.array(c["centers"]), np.array(c["xi_infinity"]))
        return build_extremal(prof, path, family=data.get("family", "custom"), params=data.get("params", {}))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def build_extremal(profile: RadialProfile, centers: CenterPath, family: str = "custom", params: dict | None = None) -> ExtremalSpec:
    """Validate nestedness and the rule that centers move only where r jumps."""
    n = profile.n
    if centers.n != n:
        raise ValueError("center dimension does not match the profile")
    if centers.heights[0] != 0.0:
        raise ValueError("center path must start at height 0")
    jump_at = {t: rl - rr for t, rl, rr in profile.jumps()}
    moved = np.any(np.diff(centers.centers, axis=0) != 0, axis=1)
    for h, mv in zip(centers.heights[1:], moved):
        if mv and h not in jump_at:
            raise ValueError(f"center jump without plateau at height {h:.6g}")
    # nestedness between every pair of constancy intervals
    ends = np.append(centers.heights[1:], profile.top_height)
    r_end = np.atleast_1d(profile.radius_left(ends))
    r_start = np.atleast_1d(profile.radius(centers.heights))
    c = centers.centers
    for i in range(len(c)):
        for j in range(i + 1, len(c)):
            dist = float(np.linalg.norm(c[i] - c[j]))
            room = float(r_end[i] - r_start[j])
            if dist > room + NEST_TOL * max(1.0, room):
                raise ValueError(
                    f"nestedness violated: centers {i},{j} are {dist:.6g} apart, radii allow {room:.6g}"
                )
    path = CenterPath(centers.heights, centers.centers, centers.centers[-1], provenance=centers.provenance)
    return ExtremalSpec(profile, path, family=family, params=dict(params or {}))


def _as_vector(e, n: int) -> np.ndarray:
    if np.ndim(e) == 0:
        v = np.zeros(n)
        v[0] = float(e)
        return v
    v = np.asarray(e, dtype=float).reshape(-1)
    if v.size != n:
        raise ValueError(f"offset must have {n} components")
    return v


def _path(n: int, heights: Sequence[float], centers: Sequence) -> CenterPath:
    c = np.array([_as_vector(x, n) for x in centers])
    h = np.asarray(heights, dtype=float)
    keep = np.concatenate([[True], np.any(np.diff(c, axis=0) != 0, axis=1)])
    return CenterPath(h[keep], c[keep], c[-1])


# -- families ---------------------------------------------------------------------


def family_cone(n: int = 2, height: float = 1.0, radius: float = 1.0, center=0.0) -> ExtremalSpec:
    prof = RadialProfile(n, (Segment(0.0, height, radius, 0.0),))
    return build_extremal(prof, _path(n, [0.0], [center]), family="cone", params={"height": height, "radius": radius})


def family_cone_frustrum(n: int, a: float, rho: float, rho_inner: float, e=0.0) -> ExtremalSpec:
    """Unit-height cone of base radius 1 with a plateau at height a.

    The radius falls linearly 1 -> rho on [0, a), jumps to rho_inner and falls
    linearly to 0 on [a, 1); the top cone is centered at e.
    """
    if not 0 < a < 1:
        raise ValueError("plateau height a must lie in (0, 1)")
    if not 0 < rho_inner < rho < 1:
        raise ValueError("need 0 < rho_inner < rho < 1")
    ev = _as_vector(e, n)
    room = rho - rho_inner
    if np.linalg.norm(ev) > room * (1 + NEST_TOL):
        raise ValueError(f"|e| = {np.linalg.norm(ev):.6g} exceeds rho - rho_inner = {room:.6g}: top cone leaves the plateau")
    prof = RadialProfile(n, (Segment(0.0, a, 1.0, rho), Segment(a, 1.0, rho_inner, 0.0)))
    params = {"a": a, "rho": rho, "rho_inner": rho_inner, "e": ev.tolist()}
    return build_extremal(prof, _path(n, [0.0, a], [np.zeros(n), ev]), family="cone_frustrum", params=params)


def family_staircase(n: int, levels: Sequence[tuple[float, float]], centers: Sequence | None = None) -> ExtremalSpec:
    """u = h_j on B(c_j, rho_j) minus the next ball: every level is a plateau.

    ``levels`` lists (h_j, rho_j) with heights increasing; ``centers`` gives
    one center per level (default: all at the origin).
    """
    levels = [(float(h), float(r)) for h, r in levels]
    if not levels:
        raise ValueError("need at least one level")
    hs = [h for h, _ in levels]
    rs = [r for _, r in levels]
    if hs[0] <= 0 or any(b <= a for a, b in zip(hs[:-1], hs[1:])):
        raise ValueError("level heights must be positive and increasing")
    if any(b >= a for a, b in zip(rs[:-1], rs[1:])) or rs[-1] <= 0:
        raise ValueError("r increasing: level radii must be positive and strictly decreasing")
    if centers is None:
        centers = [0.0] * len(levels)
    if len(centers) != len(levels):
        raise ValueError("one center per level required")
    bottoms = [0.0] + hs[:-1]
    segs = tuple(Segment(b, h, r, r) for b, h, r in zip(bottoms, hs, rs))
    prof = RadialProfile(n, segs)
    params = {"levels": levels, "centers": [_as_vector(c, n).tolist() for c in centers]}
    return build_extremal(prof, _path(n, bottoms, centers), family="staircase", params=params)


def cantor_heights(depth: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Midpoints of the 2^depth intervals left at stage ``depth`` of the middle-thirds construction."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    left = np.zeros(1)
    width = 1.0
    for _ in range(depth):
        width /= 3.0
        left = np.concatenate([left, left + 2.0 * width])
    return lo + (hi - lo) * (np.sort(left) + 0.5 * width)


def family_devils_staircase(
    n: int = 2,
    cantor_depth: int = 8,
    base: float = 1.0,
    slope: float = 1.0,
    window: tuple[float, float] = (0.2, 0.5),
    sc_fraction: float = 0.1,
    offset: float = 0.0,
) -> ExtremalSpec:
    """Cone-like profile (|r'| = slope) plus a depth-truncated Cantor measure.

    The singular-continuous part of mass ``sc_fraction * omega_n * base^n`` is
    spread over the Cantor set placed in ``window``; at finite depth it is
    2^depth equal point masses, so the total is the same at every depth.
    ``offset`` in [0, 1] moves the center at each step by that fraction of the
    radius jump.
    """
    if not 0 <= cantor_depth <= 20:
        raise ValueError("cantor_depth must lie in [0, 20]")
    if not 0 <= offset <= 1:
        raise ValueError("offset must lie in [0, 1]")
    prof0 = RadialProfile(n, (Segment(0.0, 1.0, 1.0, 0.0),))
    w = prof0.omega
    heights = cantor_heights(cantor_depth, *window)
    mass = sc_fraction * w * base**n / heights.size
    segs = []
    t_prev, r_prev = 0.0, base
    cen = [np.zeros(n)]
    for h in heights:
        h = float(h)
        r_left = r_prev - slope * (h - t_prev)
        if r_left <= 0:
            raise ValueError("profile reaches zero before the Cantor window ends")
        rem = r_left**n - mass / w
        if rem <= 0:
            raise ValueError("singular mass exceeds the available level-set volume")
        r_right = rem ** (1.0 / n)
        segs.append(Segment(t_prev, h, r_prev, r_left))
        step = np.zeros(n)
        step[0] = offset * (r_left - r_right)
        cen.append(cen[-1] + step)
        t_prev, r_prev = h, r_right
    segs.append(Segment(t_prev, t_prev + r_prev / slope, r_prev, 0.0))
    prof = RadialProfile(n, tuple(segs), frozenset(float(h) for h in heights))
    params = {
        "cantor_depth": cantor_depth,
        "base": base,
        "slope": slope,
        "window": list(window),
        "sc_fraction": sc_fraction,
        "offset": offset,
    }
    return build_extremal(prof, _path(n, [0.0] + [float(h) for h in heights], cen), family="devils_staircase", params=params)


FAMILIES = {
    "cone": family_cone,
    "cone_frustrum": family_cone_frustrum,
    "staircase": family_staircase,
    "devils_staircase": family_devils_staircase,
}


def make_family(tag: str, **params) -> ExtremalSpec:
    if tag not in FAMILIES:
        raise KeyError(f"unknown family {tag!r}; choose from {sorted(FAMILIES)}")
    return FAMILIES[tag](**params)


# -- exact statistics ----------------------------------------------------------------


def _quad(f, a, b, points=None) -> float:
    if b <= a:
        return 0.0
    val, _ = integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-12, limit=200, points=points)
    return float(val)


@dataclass(frozen=True, eq=False)
class ExtremalStats:
    spec: ExtremalSpec

    @property
    def profile(self) -> RadialProfile:
        return self.spec.profile

    @property
    def n(self) -> int:
        return self.spec.n

    def F(self, t):
        return self.profile.F(t)

    @property
    def sobolev(self) -> bool:
        return self.profile.is_sobolev

    @property
    def bv_only(self) -> bool:
        return not self.sobolev

    @property
    def jump_masses(self) -> list[tuple[float, float]]:
        return self.profile.jump_masses("all")

    @property
    def lambda_C(self) -> float:
        """|C|: the interior plateaus, i.e. the total singular mass of mu."""
        return float(sum(m for _, m in self.jump_masses))

    @property
    def sc_mass(self) -> float:
        return float(sum(m for _, m in self.profile.jump_masses("sc")))

    @property
    def top_plateau_mass(self) -> float:
        return self.profile.omega * self.profile.top_plateau_radius**self.n

    @property
    def support_measure(self) -> float:
        return self.profile.omega * self.profile.support_radius**self.n

    def F_s(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for h, m in self.jump_masses:
            out = out + m * (h > t)
        return float(out) if out.ndim == 0 else out

    def annulus_mass(self, seg: Segment) -> float:
        w = self.profile.omega
        return w * (seg.r0**self.n - seg.r1**self.n)

    def gradient_on(self, seg: Segment) -> float:
        """|grad u| on the annulus swept by a sloped segment."""
        return math.inf if seg.flat else 1.0 / seg.slope

    def grad_norm(self, p: float) -> float:
        """||grad u||_p by the coarea formula; infinite for functions with value jumps."""
        if not self.sobolev:
            return math.inf
        if p == math.inf:
            return max(self.gradient_on(s) for s in self.profile.segments)
        total = sum(self.gradient_on(s) ** p * self.annulus_mass(s) for s in self.profile.segments)
        return total ** (1.0 / p)

    def integral_of(self, g, segments=None, plateaus: bool = True, top: bool = True) -> float:
        """Integral of g(u) over the support, split into plateaus and sloped annuli.

        ``segments`` restricts the sloped part to the given segment indices.
        """
        prof = self.profile
        n, w = self.n, prof.omega
        total = 0.0
        if plateaus:
            total += sum(m * float(g(h)) for h, m in self.jump_masses)
        if top and prof.segments:
            total += self.top_plateau_mass * float(g(prof.top_height))
        for k, s in enumerate(prof.segments):
            if s.flat or (segments is not None and k not in segments):
                continue
            dens = lambda t, s=s: float(g(t)) * n * w * float(s.radius(t)) ** (n - 1) * s.slope
            total += _quad(dens, s.t0, s.t1)
        return total

    def lq_norm(self, q: float) -> float:
        if q < 1:
            raise ValueError("q must be >= 1")
        return self.integral_of(lambda t: t**q) ** (1.0 / q)

    def uXC_norm(self, q: float) -> float:
        """||u X_C||_q = (sum over plateaus of mass * height^q)^{1/q}."""
        return sum(m * h**q for h, m in self.jump_masses) ** (1.0 / q)

    def psi_integral(self, psi) -> float:
        return self.integral_of(psi)

    def affine_segments(self, V) -> list[int]:
        """Indices of sloped segments whose gradient lies in the open set V."""
        out = []
        for k, s in enumerate(self.profile.segments):
            if s.flat:
                continue
            g = self.gradient_on(s)
            if any(lo < g < hi for lo, hi in V):
                out.append(k)
        return out

    def lambda_C_phi(self, V) -> float:
        segs = self.affine_segments(V)
        return self.lambda_C + sum(self.annulus_mass(self.profile.segments[k]) for k in segs)

    def F_s_phi(self, t, V):
        """|C_Phi intersected with {u > t}|."""
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.F_s(t), dtype=float)
        w, n = self.profile.omega, self.n
        for k in self.affine_segments(V):
            s = self.profile.segments[k]
            r_hi = np.where(t < s.t0, s.r0, np.where(t < s.t1, s.radius(np.clip(t, s.t0, s.t1)), s.r1))
            out = out + w * (r_hi**n - s.r1**n)
        return float(out) if out.ndim == 0 else out

    def jump_variation(self) -> float:
        """|u| jumps across spheres: sum of (value gap) * (sphere area)."""
        n, w = self.n, self.profile.omega
        return float(sum((s.t1 - s.t0) * n * w * s.r0 ** (n - 1) for s in self.profile.segments if s.flat))

    def summary(self) -> dict:
        return {
            "n": self.n,
            "lambda_C": self.lambda_C,
            "sc_mass": self.sc_mass,
            "top_plateau_mass": self.top_plateau_mass,
            "support_measure": self.support_measure,
            "sobolev": self.sobolev,
            "bv_only": self.bv_only,
            "jumps": self.jump_masses,
        }


def extremal_exact_stats(spec: ExtremalSpec) -> ExtremalStats:
    return ExtremalStats(spec)
