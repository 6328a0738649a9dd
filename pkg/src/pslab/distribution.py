"""Distribution functions F(t) = |{u > t}|, tabulated on a threshold grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True, eq=False)
class DistFn:
    """Tabulated distribution function with an optional exact evaluator.

    ``values[i]`` is F at ``thresholds[i]``; ``left_values[i]`` is the left
    limit F(t-). Empirical instances keep the sorted cell values so F can be
    evaluated exactly anywhere; analytic instances keep the radial profile.
    """

    n: int
    thresholds: np.ndarray
    values: np.ndarray
    left_values: np.ndarray
    provenance: str = "empirical"
    sorted_values: np.ndarray | None = None
    cell_volume: float | None = None
    profile: Any = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("thresholds must be a nonempty 1D array")
        if np.any(np.diff(t) <= 0):
            raise ValueError("thresholds must be strictly increasing")
        if t[0] < 0:
            raise ValueError("thresholds must be nonnegative")
        for name in ("thresholds", "values", "left_values"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != t.shape:
                raise ValueError(f"{name} must match thresholds in shape")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(np.diff(self.values) > 1e-12 * max(1.0, float(self.values[0]))):
            raise ValueError("distribution function must be nonincreasing")
        if np.any(self.values < 0):
            raise ValueError("distribution function must be nonnegative")

    def __call__(self, t):
        """F(t) with right-continuous convention."""
        t = np.asarray(t, dtype=float)
        if self.sorted_values is not None:
            k = self.sorted_values.size - np.searchsorted(self.sorted_values, t, side="right")
            out = k * self.cell_volume
        elif self.profile is not None:
            out = self.profile.F(t)
        else:
            # step interpolation keeps right-continuity of the tabulation
            idx = np.searchsorted(self.thresholds, t, side="right") - 1
            out = np.where(idx < 0, self.left_values[0], self.values[np.clip(idx, 0, None)])
        return float(out) if np.ndim(out) == 0 else np.asarray(out, dtype=float)

    def left(self, t):
        """Left limit F(t-)."""
        t = np.asarray(t, dtype=float)
        if self.sorted_values is not None:
            k = self.sorted_values.size - np.searchsorted(self.sorted_values, t, side="left")
            out = k * self.cell_volume
        elif self.profile is not None:
            out = self.profile.F_left(t)
        else:
            idx = np.searchsorted(self.thresholds, t, side="left")
            out = np.where(
                idx < self.thresholds.size,
                self.left_values[np.clip(idx, None, self.thresholds.size - 1)],
                self.values[-1],
            )
        return float(out) if np.ndim(out) == 0 else np.asarray(out, dtype=float)

    @property
    def top(self) -> float:
        if self.sorted_values is not None:
            return float(self.sorted_values[-1]) if self.sorted_values.size else 0.0
        if self.profile is not None:
            return float(self.profile.top_height)
        return float(self.thresholds[-1])


def empirical_distfn(values: np.ndarray, cell_volume: float, n: int, thresholds=None, count: int = 512) -> DistFn:
    vals = np.sort(np.asarray(values, dtype=float).ravel())
    top = float(vals[-1]) if vals.size else 0.0
    if thresholds is None:
        thresholds = np.linspace(0.0, top if top > 0 else 1.0, count + 1)[1:]
    thresholds = np.asarray(thresholds, dtype=float)
    if np.any(thresholds <= 0):
        raise ValueError("thresholds must be positive")
    right = (vals.size - np.searchsorted(vals, thresholds, side="right")) * cell_volume
    left = (vals.size - np.searchsorted(vals, thresholds, side="left")) * cell_volume
    return DistFn(
        n=n,
        thresholds=thresholds,
        values=right,
        left_values=left,
        provenance="empirical",
        sorted_values=vals,
        cell_volume=float(cell_volume),
    )
