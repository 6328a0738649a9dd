"""Symmetric decreasing rearrangement, horizontal slice removal and the
approximation sequence that strips singular-continuous heights."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .distribution import DistFn
from .field import GridField
from .geometry import unit_ball_volume

_REL = 1e-12


@dataclass(frozen=True)
class Segment:
    """Piece of a radial profile: r is linear from r0 = r(t0) to r1 = r(t1-)."""

    t0: float
    t1: float
    r0: float
    r1: float

    @property
    def slope(self) -> float:
        """|r'| on the segment."""
        return (self.r0 - self.r1) / (self.t1 - self.t0)

    @property
    def flat(self) -> bool:
        return self.r0 == self.r1

    def radius(self, t):
        return self.r0 + (self.r1 - self.r0) * (np.asarray(t, dtype=float) - self.t0) / (self.t1 - self.t0)


@dataclass(frozen=True)
class RadialProfile:
    """Radius r(t) of the level set {u > t}: right-continuous, nonincreasing,
    piecewise linear with jumps at segment junctions.

    ``sc_heights`` lists jump heights that stand in for singular-continuous
    mass (finite-depth Cantor steps) rather than genuine plateaus.
    """

    n: int
    segments: tuple[Segment, ...]
    sc_heights: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "sc_heights", frozenset(float(h) for h in self.sc_heights))
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if not segs:
            return
        if segs[0].t0 != 0.0:
            raise ValueError("profile must start at height 0")
        for k, s in enumerate(segs):
            if not s.t1 > s.t0:
                raise ValueError(f"segment {k} has nonpositive length")
            if s.r1 < 0 or s.r0 < 0:
                raise ValueError("radii must be nonnegative")
            if s.r1 > s.r0 * (1 + _REL):
                raise ValueError("r increasing: radius must be nonincreasing in t")
            if k and abs(segs[k - 1].t1 - s.t0) > _REL * max(1.0, s.t0):
                raise ValueError("segments must be contiguous")
            if k and s.r0 > segs[k - 1].r1 * (1 + _REL) + 1e-15:
                raise ValueError("r increasing: upward jump between segments")
        for h in self.sc_heights:
            if h not in self.knots[1:-1]:
                raise ValueError(f"singular-continuous height {h} is not an interior knot")

    # -- structure ---------------------------------------------------------
    @property
    def top_height(self) -> float:
        return self.segments[-1].t1 if self.segments else 0.0

    @property
    def knots(self) -> np.ndarray:
        if not self.segments:
            return np.zeros(1)
        return np.array([s.t0 for s in self.segments] + [self.segments[-1].t1])

    @property
    def omega(self) -> float:
        return unit_ball_volume(self.n)

    @property
    def support_radius(self) -> float:
        return self.segments[0].r0 if self.segments else 0.0

    @property
    def top_plateau_radius(self) -> float:
        return self.segments[-1].r1 if self.segments else 0.0

    @property
    def is_sobolev(self) -> bool:
        """False when some level range is skipped (u jumps in value)."""
        return not any(s.flat for s in self.segments)

    def jumps(self) -> list[tuple[float, float, float]]:
        """Interior jumps as (height, r(t-), r(t)), bottom to top."""
        out = []
        for prev, s in zip(self.segments[:-1], self.segments[1:]):
            if prev.r1 > s.r0:
                out.append((s.t0, prev.r1, s.r0))
        return out

    def jump_masses(self, kind: str = "all") -> list[tuple[float, float]]:
        """(height, omega_n (r(t-)^n - r(t)^n)) for interior jumps.

        ``kind`` selects "plateau", "sc" (singular-continuous stand-ins) or "all".
        """
        w = self.omega
        out = []
        for t, rl, rr in self.jumps():
            is_sc = t in self.sc_heights
            if kind == "all" or (kind == "sc") == is_sc:
                out.append((t, w * (rl**self.n - rr**self.n)))
        return out

    def breakpoints(self) -> list[tuple[float, float]]:
        return [(s.t0, s.r0) for s in self.segments] + [(self.top_height, 0.0)]

    # -- evaluation --------------------------------------------------------
    @cached_property
    def _arrays(self) -> tuple[np.ndarray, ...]:
        segs = self.segments
        return tuple(np.array([getattr(g, k) for g in segs]) for k in ("t0", "t1", "r0", "r1"))

    def _eval(self, t, side: str):
        t = np.asarray(t, dtype=float)
        if not self.segments:
            out = np.zeros(t.shape)
            return float(out) if out.ndim == 0 else out
        t0, t1, r0, r1 = self._arrays
        idx = np.clip(np.searchsorted(t0, t, side=side) - 1, 0, None)
        inside = t < t1[idx] if side == "right" else t <= t1[idx]
        r = r0[idx] + (r1[idx] - r0[idx]) * (t - t0[idx]) / (t1[idx] - t0[idx])
        out = np.where(inside, r, 0.0)
        below = t < 0 if side == "right" else t <= 0
        out = np.where(below, r0[0], out)
        return float(out) if out.ndim == 0 else out

    def radius(self, t):
        """r(t), right-continuous; r = 0 at and above the top height."""
        return self._eval(t, "right")

    def radius_left(self, t):
        """Left limit r(t-)."""
        return self._eval(t, "left")

    def F(self, t):
        return self.omega * np.asarray(self.radius(t)) ** self.n

    def F_left(self, t):
        return self.omega * np.asarray(self.radius_left(t)) ** self.n

    def distfn(self, thresholds=None, count: int = 512) -> DistFn:
        if thresholds is None:
            thresholds = np.linspace(0.0, self.top_height or 1.0, count + 1)[1:]
        thresholds = np.asarray(thresholds, dtype=float)
        return DistFn(
            n=self.n,
            thresholds=thresholds,
            values=self.F(thresholds),
            left_values=self.F_left(thresholds),
            provenance="analytic",
            profile=self,
        )

    def scaled(self, radius_factor: float = 1.0, height_factor: float = 1.0) -> "RadialProfile":
        segs = tuple(
            Segment(s.t0 * height_factor, s.t1 * height_factor, s.r0 * radius_factor, s.r1 * radius_factor)
            for s in self.segments
        )
        return RadialProfile(self.n, segs, frozenset(h * height_factor for h in self.sc_heights))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "segments": [[s.t0, s.t1, s.r0, s.r1] for s in self.segments],
            "sc_heights": sorted(self.sc_heights),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RadialProfile":
        segs = tuple(Segment(*map(float, s)) for s in data["segments"])
        return cls(int(data["n"]), segs, frozenset(data.get("sc_heights", ())))

    @classmethod
    def from_breakpoints(cls, n: int, points: Sequence[tuple[float, float, float]]) -> "RadialProfile":
        """Build from (t, r(t-), r(t)) triples; r is linear between consecutive heights.

        The first triple must sit at t = 0 and the last at the top height.
        """
        pts = [tuple(map(float, p)) for p in points]
        segs = []
        for (t0, _, r0), (t1, r1, _) in zip(pts[:-1], pts[1:]):
            segs.append(Segment(t0, t1, r0, r1))
        return cls(n, tuple(segs))


# -- rearrangement -----------------------------------------------------------


def rearrange(field: GridField) -> GridField:
    """Discrete symmetric decreasing rearrangement on an origin-centered grid.

    Values sorted in decreasing order are written into cells ordered by
    distance from the origin; equal distances are broken lexicographically by
    cell coordinates. The multiset of values is preserved exactly.
    """
    dims = np.array(field.dims)
    origin = -0.5 * dims * field.spacing
    out_shape = field.dims
    axes = [origin[k] + (np.arange(m) + 0.5) * field.spacing for k, m in enumerate(out_shape)]
    mesh = np.meshgrid(*axes, indexing="ij")
    dist2 = sum(c * c for c in mesh).ravel()
    keys = [c.ravel() for c in reversed(mesh)] + [dist2]
    cell_order = np.lexsort(keys)
    vals = field.values.ravel()
    value_order = np.argsort(-vals, kind="stable")
    out = np.empty_like(vals)
    out[cell_order] = vals[value_order]
    return GridField(values=out.reshape(out_shape), spacing=field.spacing, origin=origin)


def rearrange_profile(distfn: DistFn) -> RadialProfile:
    """Radius profile r(t) = (F(t)/omega_n)^{1/n} of the rearrangement."""
    if distfn.profile is not None:
        return distfn.profile
    n = distfn.n
    w = unit_ball_volume(n)
    t = distfn.thresholds
    right = distfn.values
    left = distfn.left_values
    if t[0] > 0:
        f0 = distfn(0.0) if distfn.sorted_values is not None else left[0]
        t = np.concatenate([[0.0], t])
        right = np.concatenate([[f0], right])
        left = np.concatenate([[f0], left])
    r_right = (right / w) ** (1.0 / n)
    r_left = (left / w) ** (1.0 / n)
    segs = []
    for k in range(len(t) - 1):
        r0, r1 = float(r_right[k]), float(r_left[k + 1])
        segs.append(Segment(float(t[k]), float(t[k + 1]), r0, min(r0, r1)))
    # drop empty tail: the level set above the last positive F carries no mass
    while segs and segs[-1].r0 == 0:
        segs.pop()
    return RadialProfile(n, tuple(segs))


# -- slice removal -----------------------------------------------------------


class SliceMap:
    """f(t) = |[0, t] minus I| for a finite union I of disjoint intervals."""

    def __init__(self, intervals: Iterable[tuple[float, float]]):
        ivs = [(float(a), float(b)) for a, b in intervals]
        for a, b in ivs:
            if not b > a:
                raise ValueError(f"interval ({a}, {b}) is empty or reversed")
        for (a0, b0), (a1, b1) in zip(ivs[:-1], ivs[1:]):
            if a1 < b0:
                raise ValueError("intervals must be disjoint and sorted")
        self.intervals = [(max(a, 0.0), b) for a, b in ivs if b > 0]
        self._lo = np.array([a for a, _ in self.intervals])
        lengths = np.array([b - a for a, b in self.intervals])
        self._len = lengths
        self._before = np.concatenate([[0.0], np.cumsum(lengths)[:-1]]) if lengths.size else lengths

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = t.copy()
        if self._lo.size:
            k = np.searchsorted(self._lo, t, side="right") - 1
            j = np.clip(k, 0, None)
            removed = self._before[j] + np.minimum(t - self._lo[j], self._len[j])
            out = np.where(k >= 0, t - removed, t)
        out = np.maximum(out, 0.0)
        return float(out) if out.ndim == 0 else out

    def kept(self, top: float) -> list[tuple[float, float]]:
        """Maximal subintervals of [0, top) that survive."""
        out = []
        start = 0.0
        for a, b in self.intervals:
            if a >= top:
                break
            if a > start:
                out.append((start, a))
            start = max(start, b)
        if start < top:
            out.append((start, top))
        return out


def slice_profile(profile: RadialProfile, smap: SliceMap) -> tuple[RadialProfile, list[float]]:
    """Profile of f(u) and, per new segment, the old height where it starts."""
    new_segs: list[Segment] = []
    origins: list[float] = []
    sc: set[float] = set()
    starts = np.array([s.t0 for s in profile.segments])
    for lo, hi in smap.kept(profile.top_height):
        first = max(int(np.searchsorted(starts, lo, side="right")) - 1, 0)
        last = int(np.searchsorted(starts, hi, side="left"))
        for s in profile.segments[first:last]:
            a, b = max(s.t0, lo), min(s.t1, hi)
            if not b > a:
                continue
            s0 = smap(a)
            length = b - a
            new_t0 = new_segs[-1].t1 if new_segs else 0.0
            if new_segs and abs(new_t0 - s0) > 1e-9 * max(1.0, s0):
                raise AssertionError("slice map produced a gap")
            new_segs.append(Segment(new_t0, new_t0 + length, float(s.radius(a)), float(s.radius(b))))
            origins.append(a)
            if a == s.t0 and a > lo and a in profile.sc_heights:
                sc.add(new_t0)
    return RadialProfile(profile.n, tuple(new_segs), frozenset(sc)), origins


def slice_removal(obj, intervals: Iterable[tuple[float, float]]):
    """Compose with f(t) = |[0, t] minus I|: grids valuewise, profiles and specs exactly."""
    smap = SliceMap(intervals)
    if isinstance(obj, GridField):
        return obj.with_values(smap(obj.values))
    if isinstance(obj, RadialProfile):
        return slice_profile(obj, smap)[0]
    if hasattr(obj, "sliced"):
        return obj.sliced(smap)
    raise TypeError(f"cannot slice object of type {type(obj).__name__}")


def approximation_intervals(heights: Sequence[float], m: int, truncate: bool = False) -> list[tuple[float, float]]:
    """Open neighborhood S_m of the given heights with total length at most 2^-m.

    Neighborhoods shrink with m, so S_{m+1} is contained in S_m. With
    ``truncate`` the tails [0, 1/m) and (m, inf) are removed as well.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    hs = sorted(float(h) for h in heights)
    ivs = []
    if hs:
        half = 2.0**-m / (2 * len(hs))
        ivs = [(max(h - half, 0.0), h + half) for h in hs]
    if truncate:
        ivs += [(0.0, 1.0 / m), (float(m), math.inf)]
    ivs.sort()
    merged: list[list[float]] = []
    for a, b in ivs:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def approximation_sequence(obj, decomposition, m: int, truncate: bool = False):
    """u_m = f_m(u) with f_m removing S_m around the singular-continuous heights."""
    ivs = approximation_intervals(decomposition.sc_heights, m, truncate=truncate)
    if not ivs:
        return obj
    return slice_removal(obj, ivs)
