"""Nonnegative functions sampled at cell centers of a uniform grid."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .distribution import DistFn, empirical_distfn

MIN_RESOLUTION = 8
HEADER_MAGIC = "pslab-gridfield"


@dataclass(frozen=True, eq=False)
class GridField:
    """Cell-center samples of u on a box with cubic cells of edge ``spacing``.

    ``origin`` is the lower corner of the box, so the cell with index i has
    center ``origin + (i + 1/2) * spacing``.
    """

    values: np.ndarray
    spacing: float
    origin: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim not in (1, 2, 3):
            raise ValueError("only 1, 2 or 3 dimensional grids are supported")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        if np.any(vals < 0):
            raise ValueError("field values must be nonnegative")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        origin = np.array(self.origin, dtype=float, copy=True).reshape(-1)
        if origin.size != vals.ndim:
            raise ValueError("origin must have one entry per axis")
        vals.setflags(write=False)
        origin.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.n

    @property
    def max_value(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    def axes(self) -> list[np.ndarray]:
        return [self.origin[k] + (np.arange(m) + 0.5) * self.spacing for k, m in enumerate(self.dims)]

    def coords(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self) -> np.ndarray:
        return np.stack([c.ravel() for c in self.coords()], axis=-1)

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(values=values, spacing=self.spacing, origin=self.origin)

    def boundary_is_zero(self) -> bool:
        v = self.values
        for ax in range(v.ndim):
            if np.any(np.take(v, 0, axis=ax) != 0) or np.any(np.take(v, -1, axis=ax) != 0):
                return False
        return True

    def check_boundary(self) -> "GridField":
        if not self.boundary_is_zero():
            raise ValueError("support touches boundary: enlarge the domain")
        return self


def field_from_function(
    evaluator: Callable[[np.ndarray], np.ndarray],
    domain: Sequence[tuple[float, float]],
    resolution: int | Sequence[int],
) -> GridField:
    """Sample a vectorized ``evaluator(points) -> values`` at cell centers.

    ``points`` has shape (N, n). Cells must be cubic, so the box extents must
    be proportional to the resolution.
    """
    domain = [tuple(map(float, d)) for d in domain]
    n = len(domain)
    res = [int(resolution)] * n if np.ndim(resolution) == 0 else [int(r) for r in resolution]
    if len(res) != n:
        raise ValueError("resolution must have one entry per axis")
    if min(res) < MIN_RESOLUTION:
        raise ValueError(f"resolution must be at least {MIN_RESOLUTION} cells per axis")
    widths = [(hi - lo) / m for (lo, hi), m in zip(domain, res)]
    if min(widths) <= 0:
        raise ValueError("domain boxes must have positive extent")
    h = widths[0]
    if any(abs(w - h) > 1e-9 * h for w in widths):
        raise ValueError("domain and resolution must give cubic cells")
    origin = np.array([lo for lo, _ in domain])
    axes = [origin[k] + (np.arange(res[k]) + 0.5) * h for k in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = np.asarray(evaluator(pts), dtype=float).reshape(res)
    if np.any(vals < 0):
        raise ValueError("evaluator returned negative samples")
    return GridField(values=vals, spacing=h, origin=origin).check_boundary()


def lq_norm(field: GridField, q: float) -> float:
    if q < 1:
        raise ValueError("q must be >= 1")
    return float((np.sum(field.values**q) * field.cell_volume) ** (1.0 / q))


def gradient(field: GridField) -> np.ndarray:
    """Finite-difference gradient, shape (n, *dims).

    Centered differences in the interior of the support, one-sided toward the
    support where a neighbor is zero, and zero outside the support.
    """
    u = field.values
    h = field.spacing
    inside = u > 0
    grads = []
    for ax in range(u.ndim):
        pad = [(0, 0)] * u.ndim
        pad[ax] = (1, 1)
        up = np.pad(u, pad)
        sl_plus = [slice(None)] * u.ndim
        sl_minus = [slice(None)] * u.ndim
        sl_plus[ax] = slice(2, None)
        sl_minus[ax] = slice(None, -2)
        plus = up[tuple(sl_plus)]
        minus = up[tuple(sl_minus)]
        fwd = (plus - u) / h
        bwd = (u - minus) / h
        g = 0.5 * (fwd + bwd)
        g = np.where((plus == 0) & (minus > 0), bwd, g)
        g = np.where((minus == 0) & (plus > 0), fwd, g)
        grads.append(np.where(inside, g, 0.0))
    return np.stack(grads)


def gradient_magnitude(field: GridField) -> np.ndarray:
    return np.sqrt(np.sum(gradient(field) ** 2, axis=0))


def gradient_norm_lp(field: GridField, p: float) -> float:
    if not 1 <= p < np.inf:
        raise ValueError("p must lie in [1, inf)")
    g = gradient_magnitude(field)
    return float((np.sum(g**p) * field.cell_volume) ** (1.0 / p))


def distribution_function(field: GridField, thresholds=None, count: int = 512) -> DistFn:
    """F(t) = (number of cells with value > t) * h^n."""
    if thresholds is not None:
        thresholds = np.asarray(thresholds, dtype=float)
        if np.any(np.diff(thresholds) <= 0) or np.any(thresholds <= 0):
            raise ValueError("thresholds must be strictly increasing and positive")
    return empirical_distfn(field.values, field.cell_volume, field.n, thresholds=thresholds, count=count)


@dataclass(frozen=True)
class LayerCake:
    direct: float
    layer_cake: float
    tolerance: float

    @property
    def discrepancy(self) -> float:
        scale = max(abs(self.direct), abs(self.layer_cake))
        return 0.0 if scale == 0 else abs(self.direct - self.layer_cake) / scale


def psi_integral(field: GridField, psi, count: int = 512, tolerance: float = 5e-3) -> LayerCake:
    """Integral of psi(u) by cell sum and by the layer-cake formula.

    Raises if the two routes disagree by more than ``tolerance`` (relative).
    """
    direct = float(np.sum(psi(field.values)) * field.cell_volume)
    top = field.max_value
    if top == 0:
        return LayerCake(direct, 0.0, tolerance)
    dist = distribution_function(field, count=count)
    edges = np.concatenate([[0.0], dist.thresholds])
    F = dist(edges)
    dpsi = np.diff(psi(edges))
    layer = float(np.sum(0.5 * (F[:-1] + F[1:]) * dpsi))
    res = LayerCake(direct, layer, tolerance)
    if res.discrepancy > tolerance:
        raise ArithmeticError(
            f"layer-cake and direct integrals disagree: {direct:.6g} vs {layer:.6g} "
            f"(relative {res.discrepancy:.3g} > {tolerance:.3g})"
        )
    return res


def random_bumps(
    rng: np.random.Generator,
    resolution: int = 256,
    n: int = 2,
    n_bumps: tuple[int, int] = (3, 8),
    floor: float = 0.01,
) -> GridField:
    """Sum of 3-8 Gaussian bumps on [-1, 1]^n, cut off at ``floor`` so it has compact support."""
    k = int(rng.integers(n_bumps[0], n_bumps[1] + 1))
    centers = rng.uniform(-0.4, 0.4, size=(k, n))
    widths = rng.uniform(0.05, 0.12, size=k)
    heights = rng.uniform(0.3, 1.0, size=k)

    def evaluator(pts):
        acc = np.zeros(len(pts))
        for c, w, a in zip(centers, widths, heights):
            acc += a * np.exp(-np.sum((pts - c) ** 2, axis=1) / (2 * w * w))
        return np.maximum(acc - floor, 0.0)

    return field_from_function(evaluator, [(-1.0, 1.0)] * n, resolution)


def save_field(field: GridField, path: str | Path) -> None:
    header = {
        "format": HEADER_MAGIC,
        "n": field.n,
        "origin": [float(x) for x in field.origin],
        "spacing": field.spacing,
        "dims": list(field.dims),
        "dtype": "<f8",
        "order": "C",
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def load_field(path: str | Path) -> GridField:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        if header.get("format") != HEADER_MAGIC:
            raise ValueError(f"{path}: not a grid field file")
        data = np.frombuffer(fh.read(), dtype="<f8")
    dims = tuple(header["dims"])
    if data.size != int(np.prod(dims)):
        raise ValueError(f"{path}: payload has {data.size} values, header promises {np.prod(dims)}")
    return GridField(values=data.reshape(dims), spacing=header["spacing"], origin=header["origin"])


def field_from_csv(path: str | Path, spacing: float, origin: Sequence[float]) -> GridField:
    """Read a 1D (single row or column) or 2D (rows along axis 0) table of values."""
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row if x.strip()] for row in csv.reader(fh) if row]
    arr = np.array(rows, dtype=float)
    if len(origin) == 1:
        arr = arr.ravel()
    return GridField(values=arr, spacing=spacing, origin=origin)
