"""Dimensional constants and exact ball geometry in low dimensions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n, with the convention omega_0 = 1."""
    if n < 0:
        raise ValueError(f"dimension must be >= 0, got {n}")
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


def kn_constant(n: int) -> float:
    """K_n = 2 omega_{n-1} / omega_n."""
    _check_dim(n)
    # ratio through log-gamma so large n does not under/overflow
    return 2.0 * math.exp(gammaln(0.5 * n + 1.0) - gammaln(0.5 * (n + 1)) - 0.5 * math.log(math.pi))


def kn_quadrature(n: int) -> float:
    """Independent route to K_n: the reciprocal of the integral of cos^n over [0, pi/2]."""
    _check_dim(n)
    val, _ = integrate.quad(lambda th: math.cos(th) ** n, 0.0, 0.5 * math.pi, epsabs=0.0, epsrel=1e-13, limit=200)
    return 1.0 / val


def ln_constant(n: int, p: float) -> float:
    """Cianchi-Fusco constant 2^{1/p'} omega_n^{-1/n}."""
    _check_dim(n)
    if p <= 1:
        raise ValueError("p must exceed 1")
    p_dual = p / (p - 1.0)
    return 2.0 ** (1.0 / p_dual) * unit_ball_volume(n) ** (-1.0 / n)


@dataclass(frozen=True)
class DimConstants:
    n: int
    omega_n: float
    omega_n_minus_1: float
    K_n: float
    L_n: float | None = None

    @classmethod
    def for_dimension(cls, n: int, p: float | None = None) -> "DimConstants":
        _check_dim(n)
        return cls(
            n=n,
            omega_n=unit_ball_volume(n),
            omega_n_minus_1=unit_ball_volume(n - 1),
            K_n=kn_constant(n),
            L_n=None if p is None else ln_constant(n, p),
        )


def ball_volume(n: int, r):
    _check_dim(n)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    out = unit_ball_volume(n) * r**n
    return float(out) if out.ndim == 0 else out


def ball_intersection_volume(n: int, r1, r2, d):
    """Volume of B(0, r1) intersected with B(d e_1, r2), elementwise.

    Closed forms for n = 1, 2, 3 only.
    """
    if n not in (1, 2, 3):
        raise ValueError(f"exact ball intersection is only available for n in (1, 2, 3), got {n}")
    r1, r2, d = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r1, r2, d)))
    r1 = np.maximum(r1, 0.0)
    r2 = np.maximum(r2, 0.0)
    d = np.abs(d)
    out = np.zeros(r1.shape)
    rmin = np.minimum(r1, r2)
    inside = d <= np.abs(r1 - r2)
    disjoint = d >= r1 + r2
    partial = ~inside & ~disjoint
    out[inside] = unit_ball_volume(n) * rmin[inside] ** n
    if np.any(partial):
        a, b, c = r1[partial], r2[partial], d[partial]
        if n == 1:
            val = np.minimum(a, c + b) - np.maximum(-a, c - b)
        elif n == 2:
            # atan2 keeps the half-angles accurate near tangency, where arccos loses sqrt(eps)
            # group a - b first so a tiny c is not absorbed by rounding
            ab = a - b
            k = (a + b - c) * (c + ab) * (c - ab) * (a + b + c)
            root = np.sqrt(np.maximum(k, 0.0))
            th1 = np.arctan2(root, c * c + ab * (a + b))
            th2 = np.arctan2(root, c * c - ab * (a + b))
            val = a * a * th1 + b * b * th2 - 0.5 * root
        else:
            s = a + b - c
            val = math.pi * s * s * (c * c + 2.0 * c * (a + b) - 3.0 * (a - b) ** 2) / (12.0 * c)
        out[partial] = np.clip(val, 0.0, unit_ball_volume(n) * rmin[partial] ** n)
    return float(out) if out.ndim == 0 else out


def ball_difference_volume(n: int, r1, r2, d):
    """Volume of B(0, r1) minus B(d e_1, r2)."""
    inter = ball_intersection_volume(n, r1, r2, d)
    out = np.maximum(unit_ball_volume(n) * np.maximum(np.asarray(r1, dtype=float), 0.0) ** n - inter, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def ball_symdiff_volume(n: int, r, d):
    """Exact measure of the symmetric difference of two radius-r balls whose centers are d apart."""
    if n not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {n}; exact symmetric difference needs n in (1, 2, 3)")
    r = np.asarray(r, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(r < 0) or np.any(d < 0):
        raise ValueError("radius and distance must be nonnegative")
    # equal radii: write |B minus B'| directly, which stays accurate as d -> 0
    dd = np.minimum(d, 2.0 * r)
    if n == 1:
        out = 2.0 * dd
    elif n == 2:
        r, dd = np.broadcast_arrays(r, dd)
        ratio = np.clip(np.divide(dd, 2.0 * r, out=np.zeros(r.shape), where=r > 0), 0.0, 1.0)
        near = 2.0 * (2.0 * r * r * np.arcsin(ratio) + 0.5 * dd * np.sqrt(np.maximum(4.0 * r * r - dd * dd, 0.0)))
        # x = 2 arccos(d / 2r); this form is well conditioned as d -> 2r
        x = 2.0 * np.arccos(ratio)
        far = 2.0 * r * r * (math.pi - (x - np.sin(x)))
        out = np.where(ratio < 0.5, near, far)
    else:
        out = 2.0 * math.pi * dd * (12.0 * r * r - dd * dd) / 12.0
    out = np.where(d >= 2.0 * r, 2.0 * unit_ball_volume(n) * r**n, out)
    return float(out) if out.ndim == 0 else out


def symdiff_bound(n: int, ball_vol, d):
    """Upper bound 2 omega_{n-1} (|B| / omega_n)^{1/n'} d for the symmetric difference of translates."""
    _check_dim(n)
    ball_vol = np.asarray(ball_vol, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(ball_vol < 0) or np.any(d < 0):
        raise ValueError("inputs must be nonnegative")
    out = 2.0 * unit_ball_volume(n - 1) * (ball_vol / unit_ball_volume(n)) ** (1.0 - 1.0 / n) * d
    return float(out) if out.ndim == 0 else out


def sphere_area(n: int, r):
    """(n-1)-dimensional measure of the sphere of radius r; counts the two endpoints in 1D."""
    _check_dim(n)
    return n * unit_ball_volume(n) * np.asarray(r, dtype=float) ** (n - 1)


def _check_dim(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
