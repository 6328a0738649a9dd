"""The measure induced by the distribution function, its decomposition into
absolutely continuous, jump and singular-continuous parts, critical sets,
the radius function R and level-set centers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import median_filter

from .distribution import DistFn
from .field import GridField, gradient_magnitude
from .geometry import unit_ball_volume

__all__ = [
    "DistFn",
    "MeasureDecomposition",
    "CriticalSet",
    "CenterPath",
    "decompose",
    "critical_set",
    "radius_function",
    "center_path",
    "center_variation_bound",
    "level_set_isoperimetric_ratio",
]


@dataclass(frozen=True, eq=False)
class MeasureDecomposition:
    n: int
    thresholds: np.ndarray
    ac_mass: np.ndarray  # per interval (t_i, t_{i+1}]
    ac_density: np.ndarray  # per interval
    jumps: tuple[tuple[float, float], ...]  # plateaus strictly inside (0, top)
    sc_heights: tuple[float, ...] = ()
    sc_masses: tuple[float, ...] = ()
    top: float = 0.0
    top_plateau_mass: float = 0.0
    provenance: str = "empirical"
    jump_tol: float | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def S(self) -> list[float]:
        return sorted([h for h, _ in self.jumps] + list(self.sc_heights))

    def _singular_items(self):
        return list(self.jumps) + list(zip(self.sc_heights, self.sc_masses))

    def mu_s(self, s: float, t: float) -> float:
        """Singular mass of the interval (s, t]."""
        return float(sum(m for h, m in self._singular_items() if s < h <= t))

    def F_s(self, t):
        """F^s(t) = mu^s((t, top))."""
        t = np.asarray(t, dtype=float)
        items = self._singular_items()
        out = np.zeros(t.shape)
        for h, m in items:
            out = out + m * (h > t)
        return float(out) if out.ndim == 0 else out

    def singular_continuous_mass(self, t=0.0):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for h, m in zip(self.sc_heights, self.sc_masses):
            out = out + m * (h > t)
        return float(out) if out.ndim == 0 else out

    @property
    def total_singular(self) -> float:
        return float(sum(m for _, m in self._singular_items()))

    @property
    def total_jump(self) -> float:
        return float(sum(m for _, m in self.jumps))

    @property
    def total_ac(self) -> float:
        return float(np.sum(self.ac_mass))

    def to_json(self) -> str:
        payload = {
            "n": self.n,
            "provenance": self.provenance,
            "thresholds": self.thresholds.tolist(),
            "ac_density": self.ac_density.tolist(),
            "jumps": [[h, m] for h, m in self.jumps],
            "sc_heights": list(self.sc_heights),
            "sc_masses": list(self.sc_masses),
            "F_s": np.atleast_1d(self.F_s(self.thresholds)).tolist(),
            "top": self.top,
            "top_plateau_mass": self.top_plateau_mass,
        }
        return json.dumps(payload, sort_keys=True)


def _grid_and_values(distfn: DistFn) -> tuple[np.ndarray, np.ndarray, float]:
    """Thresholds with 0 prepended, F on them, and the top plateau mass.

    The last value is replaced by F(top-) when the last threshold is the
    maximum, which keeps the top plateau out of mu.
    """
    t = distfn.thresholds
    F = distfn.values.copy()
    if t[0] > 0:
        t = np.concatenate([[0.0], t])
        F = np.concatenate([[distfn(0.0)], F])
    top = distfn.top
    top_plateau = 0.0
    if t[-1] >= top > 0:
        top_plateau = float(distfn.left(top) - distfn(top))
        F[-1] = distfn.left(top)
    return t, F, top_plateau


def decompose(distfn: DistFn, jump_tol: float | None = None) -> MeasureDecomposition:
    """Split the measure mu((a, b]) = F(a) - F(b) on the threshold intervals.

    Analytic distribution functions carry their profile and are decomposed
    exactly. Empirical ones flag an interval as holding a jump when its drop
    exceeds ``jump_tol``; the default is four times the largest absolutely
    continuous drop, estimated by a running median of interval drops.
    """
    if distfn.profile is not None:
        return _decompose_exact(distfn)
    t, F, top_plateau = _grid_and_values(distfn)
    if t.size < 2:
        raise ValueError("need at least two thresholds")
    dt = np.diff(t)
    drops = F[:-1] - F[1:]
    baseline = median_filter(drops, size=7, mode="nearest")
    max_ac = float(baseline.max()) if baseline.size else 0.0
    if jump_tol is None:
        jump_tol = 4.0 * max_ac
    elif jump_tol < 2.0 * max_ac:
        raise ValueError(
            f"jump_tol={jump_tol:.4g} is below two interval AC masses ({2 * max_ac:.4g}); "
            "the threshold grid cannot separate jumps from steep absolutely continuous parts"
        )
    jumps = []
    ac = drops.copy()
    for i in np.nonzero(drops > jump_tol)[0]:
        lo, hi = t[i], t[i + 1]
        if distfn.sorted_values is not None:
            sv = distfn.sorted_values
            seg = sv[(sv > lo) & (sv <= hi)]
            if hi >= distfn.top:
                seg = seg[seg < distfn.top]
            if seg.size == 0:
                continue
            vals, counts = np.unique(seg, return_counts=True)
            k = int(np.argmax(counts))
            height, mass = float(vals[k]), float(counts[k] * distfn.cell_volume)
        else:
            height, mass = float(hi), float(drops[i] - baseline[i])
        jumps.append((height, mass))
        ac[i] = drops[i] - mass
    return MeasureDecomposition(
        n=distfn.n,
        thresholds=t,
        ac_mass=ac,
        ac_density=ac / dt,
        jumps=tuple(jumps),
        top=distfn.top,
        top_plateau_mass=top_plateau,
        provenance="empirical",
        jump_tol=float(jump_tol),
        notes=("singular-continuous mass is not resolvable on grids",),
    )


def _decompose_exact(distfn: DistFn) -> MeasureDecomposition:
    prof = distfn.profile
    n, w = prof.n, prof.omega
    plateau = prof.jump_masses("plateau")
    sc = prof.jump_masses("sc")
    t, F, _ = _grid_and_values(distfn)
    drops = F[:-1] - F[1:]
    sing = np.zeros(drops.shape)
    for h, m in plateau + sc:
        i = np.searchsorted(t, h, side="left") - 1
        if 0 <= i < sing.size:
            sing[i] += m
    ac = np.maximum(drops - sing, 0.0)
    mid = 0.5 * (t[:-1] + t[1:])
    density = np.zeros(mid.shape)
    for s in prof.segments:
        mask = (mid >= s.t0) & (mid < s.t1)
        if np.any(mask) and not s.flat:
            density[mask] = n * w * s.radius(mid[mask]) ** (n - 1) * s.slope
    return MeasureDecomposition(
        n=n,
        thresholds=t,
        ac_mass=ac,
        ac_density=density,
        jumps=tuple(plateau),
        sc_heights=tuple(h for h, _ in sc),
        sc_masses=tuple(m for _, m in sc),
        top=prof.top_height,
        top_plateau_mass=w * prof.top_plateau_radius**n,
        provenance="analytic",
    )


# -- critical set ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CriticalSet:
    mask: np.ndarray
    cell_volume: float
    eps: float
    heights: np.ndarray  # u on the critical cells, ascending

    @property
    def measure(self) -> float:
        return float(self.mask.sum() * self.cell_volume)

    def distribution(self, t):
        """|C intersected with {u > t}|, the grid surrogate for F^s."""
        k = self.heights.size - np.searchsorted(self.heights, np.asarray(t, dtype=float), side="right")
        return k * self.cell_volume


def critical_set(field: GridField, eps: float) -> CriticalSet:
    if not eps > 0:
        raise ValueError("eps must be positive")
    u = field.values
    top = field.max_value
    mask = (u > 0) & (u < top) & (gradient_magnitude(field) < eps)
    return CriticalSet(mask=mask, cell_volume=field.cell_volume, eps=float(eps), heights=np.sort(u[mask]))


def radius_function(field: GridField, distfn: DistFn) -> GridField:
    """R(x) = (F(u(x)) / omega_n)^{1/n} per cell."""
    w = unit_ball_volume(field.n)
    F = np.asarray(distfn(field.values), dtype=float)
    return field.with_values((F / w) ** (1.0 / field.n))


# -- centers -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CenterPath:
    """Centers of the level balls, constant from ``heights[k]`` up to the next height."""

    heights: np.ndarray
    centers: np.ndarray
    xi_infinity: np.ndarray
    provenance: str = "analytic"

    def __post_init__(self):
        h = np.asarray(self.heights, dtype=float).reshape(-1)
        c = np.asarray(self.centers, dtype=float)
        if c.ndim == 1:
            c = c.reshape(1, -1)
        if c.shape[0] != h.size:
            raise ValueError("one center per height required")
        if np.any(np.diff(h) <= 0):
            raise ValueError("center heights must be strictly increasing")
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "xi_infinity", np.asarray(self.xi_infinity, dtype=float).reshape(-1))

    @property
    def n(self) -> int:
        return self.centers.shape[1]

    def at(self, t) -> np.ndarray:
        idx = np.clip(np.searchsorted(self.heights, np.asarray(t, dtype=float), side="right") - 1, 0, None)
        return self.centers[idx]

    def total_variation(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.centers, axis=0), axis=1)))

    def jump_heights(self) -> list[float]:
        moved = np.any(np.diff(self.centers, axis=0) != 0, axis=1)
        return [float(h) for h in self.heights[1:][moved]]

    @classmethod
    def constant(cls, center) -> "CenterPath":
        c = np.asarray(center, dtype=float).reshape(1, -1)
        return cls(np.zeros(1), c, c[0])

    def to_dict(self) -> dict:
        return {
            "heights": self.heights.tolist(),
            "centers": self.centers.tolist(),
            "xi_infinity": self.xi_infinity.tolist(),
        }


def level_set_isoperimetric_ratio(field: GridField, t: float) -> float:
    """Isoperimetric quotient of {u > t}: 1 for a ball, larger otherwise.

    1D: number of connected components. 2D: P^2 / (4 pi A) from marching
    squares contours. 3D: A^3 / (36 pi V^2) from a marching cubes surface.
    """
    from skimage import measure as skm

    u = np.pad(field.values, 1)
    h = field.spacing
    if field.n == 1:
        mask = u > t
        return float(np.count_nonzero(np.diff(mask.astype(int)) == 1))
    if field.n == 2:
        contours = skm.find_contours(u, t)
        perim = 0.0
        area = 0.0
        for c in contours:
            seg = np.diff(c, axis=0)
            perim += np.sum(np.hypot(seg[:, 0], seg[:, 1]))
            x, y = c[:, 0], c[:, 1]
            area += 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        if area == 0:
            return math.inf
        return float((perim * h) ** 2 / (4 * math.pi * area * h * h))
    verts, faces, _, _ = skm.marching_cubes(u, level=t, spacing=(h, h, h))
    surf = skm.mesh_surface_area(verts, faces)
    vol = np.count_nonzero(field.values > t) * h**3
    return float(surf**3 / (36 * math.pi * vol**2))


def center_path(obj, thresholds=None, ratio_tol: float = 1.1, min_cells: int = 25) -> CenterPath:
    """Centers of the level sets {u > t}.

    Extremal specs report their exact centers. Grid fields report centroids
    after checking that every resolvable level set is ball shaped.
    """
    if not isinstance(obj, GridField):
        spec = obj
        if thresholds is None:
            thresholds = spec.centers.heights
        thresholds = np.asarray(thresholds, dtype=float)
        return CenterPath(thresholds, spec.centers.at(thresholds), spec.centers.xi_infinity)

    field = obj
    if thresholds is None:
        top = field.max_value
        thresholds = np.linspace(0.0, top, 65)[1:-1]
    thresholds = np.asarray(thresholds, dtype=float)
    pts = field.coords()
    hs, cs = [], []
    for t in thresholds:
        mask = field.values > t
        k = int(mask.sum())
        if k == 0:
            break
        if k >= min_cells:
            ratio = level_set_isoperimetric_ratio(field, float(t))
            if ratio > ratio_tol:
                raise ValueError(f"level set not a ball at t={t:.4g} (isoperimetric ratio {ratio:.3f})")
        hs.append(float(t))
        cs.append([float(p[mask].mean()) for p in pts])
    if not hs:
        raise ValueError("no nonempty level sets at the given thresholds")
    return CenterPath(np.array(hs), np.array(cs), np.array(cs[-1]), provenance="grid")


def center_variation_bound(decomposition: MeasureDecomposition, s: float | None = None, t: float | None = None) -> float:
    """(mu^s((s, t]) / omega_n)^{1/n}; with no heights, (|C| / omega_n)^{1/n}."""
    w = unit_ball_volume(decomposition.n)
    if s is None and t is None:
        mass = decomposition.total_singular
    else:
        if not (0 < s < t):
            raise ValueError("need 0 < s < t")
        mass = decomposition.mu_s(s, t)
    return (mass / w) ** (1.0 / decomposition.n)
