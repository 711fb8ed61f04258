"""Finite-depth pressure over preimage trees and the Bowen root.

Z_n(tau) = sum over the 2^n preimages z_w of the base point of
|(f^n)'(z_w)|^(-tau), and P_n = log(Z_n) / n. The plain root of P_n carries
an O(1/n) bias from the constant in Z_n ~ C beta^n, so the dimension is
taken from the root of the increment log Z_n - log Z_{n-1}, which converges
geometrically, and then Aitken-accelerated.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._numerics import log_sum_exp
from .dynamics import (RayParameter, TreeLevel, _as_delta, default_base, expand_level,
                       is_admissible, preimage_levels)

MAX_PRESSURE_DEPTH = 26
MATERIALIZED_DEPTH = 20       # deeper sums stream over subtrees of this size
MIN_ABS_DELTA = 1e-5
BRACKET = (0.5, 1.5)


class NoBracketError(ValueError):
    pass


class AdmissibilityError(ValueError):
    pass


class DepthCapWarning(RuntimeWarning):
    pass


def check_parameter(delta) -> complex:
    delta = _as_delta(delta)
    if delta == 0:
        return delta
    if abs(delta) < MIN_ABS_DELTA:
        raise AdmissibilityError(
            f"|delta| = {abs(delta):.3g} < {MIN_ABS_DELTA:g}: the tree depth needed grows "
            "like log(1/|delta|) and results would be unreliable")
    if not is_admissible(delta):
        raise AdmissibilityError("critical orbit does not escape: parameter is not admissible")
    return delta


def log_partition(log_derivative: np.ndarray, tau: float) -> float:
    """log sum |(f^n)'|^(-tau) from the per-node log-derivatives."""
    return log_sum_exp(-tau * np.asarray(log_derivative))


def _streamed_log_partition(delta, tau, n, base, threads):
    # expand the top of the tree, then each subtree separately
    top = n - MATERIALIZED_DEPTH
    lvl = None
    for lvl in preimage_levels(delta, top, base=base, threads=threads):
        pass
    parts = []
    for i in range(len(lvl.points)):
        sub = TreeLevel(top, lvl.points[i:i + 1], lvl.log_derivative[i:i + 1])
        for _ in range(MATERIALIZED_DEPTH):
            sub = expand_level(delta, sub, threads)
        parts.append(log_partition(sub.log_derivative, tau))
    return log_sum_exp(np.array(parts))


def pressure_at(delta, tau: float, n: int, base=None, threads: int = 1) -> float:
    """P_n(tau) = (1/n) log sum_w |(f^n)'(z_w)|^(-tau)."""
    delta = _as_delta(delta)
    if not 1 <= n <= MAX_PRESSURE_DEPTH:
        raise ValueError(f"depth must be in 1..{MAX_PRESSURE_DEPTH}")
    z0 = default_base(delta) if base is None else base
    if n <= MATERIALIZED_DEPTH:
        lvl = None
        for lvl in preimage_levels(delta, n, base=z0, threads=threads):
            pass
        return log_partition(lvl.log_derivative, tau) / n
    return _streamed_log_partition(delta, tau, n, z0, threads) / n


@dataclass
class PressureCurve:
    delta: complex
    depth: int
    samples: list = field(default_factory=list)   # (tau, P_n(tau))
    root_estimate: float | None = None

    def is_decreasing(self) -> bool:
        vals = [p for _, p in sorted(self.samples)]
        return all(b < a for a, b in zip(vals, vals[1:]))


def pressure_curve(delta, n: int, taus, base=None, threads: int = 1) -> PressureCurve:
    """Sampled P_n and its root, bracketed by a sign change of the samples."""
    delta = _as_delta(delta)
    z0 = default_base(delta) if base is None else base
    lvl = None
    for lvl in preimage_levels(delta, n, base=z0, threads=threads):
        pass
    ld = lvl.log_derivative
    P = lambda tau: log_partition(ld, tau) / n
    samples = [(float(t), P(float(t))) for t in sorted(taus)]
    root = None
    for (t0, p0), (t1, p1) in zip(samples, samples[1:]):
        if p0 == 0:
            root = t0
            break
        if p0 > 0 > p1:
            root = brentq(P, t0, t1, xtol=1e-14)
            break
    return PressureCurve(delta, n, samples, root)


@dataclass
class DimensionEstimate:
    delta: complex
    d_value: float
    depth_used: int
    extrapolation_error: float
    roots: list = field(default_factory=list)         # increment roots per depth
    extrapolants: list = field(default_factory=list)  # Aitken values per depth
    converged: bool = True
    base: complex | None = None


def increment_root(ld_prev: np.ndarray, ld_cur: np.ndarray, bracket=BRACKET) -> float:
    """tau with log Z_n(tau) = log Z_{n-1}(tau)."""
    g = lambda tau: log_partition(ld_cur, tau) - log_partition(ld_prev, tau)
    lo, hi = bracket
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    if glo * ghi > 0:
        raise NoBracketError(f"pressure increment has no sign change on [{lo}, {hi}]")
    return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def aitken(r0: float, r1: float, r2: float) -> float:
    d1, d2 = r1 - r0, r2 - r1
    den = d2 - d1
    if den == 0 or not math.isfinite(den):
        return r2
    a = r2 - d2 * d2 / den
    # a wild jump means the sequence is not (yet) geometric
    if abs(a - r2) > 10 * abs(d2) + 1e-15:
        return r2
    return a


def dimension(delta, target_tol: float = 1e-6, max_depth: int = 22, min_depth: int = 10,
              base=None, threads: int = 1, bracket=BRACKET) -> DimensionEstimate:
    """Hausdorff dimension of the Julia set from the Bowen equation."""
    delta = check_parameter(delta)
    if target_tol <= 0:
        raise ValueError("target_tol must be positive")
    if max_depth > 24:
        raise ValueError("dimension keeps whole tree levels in memory; max_depth <= 24")
    z0 = default_base(delta) if base is None else complex(base)
    roots, extrap = [], []
    prev_ld = None
    converged = False
    err = math.inf
    depth = 0
    for lvl in preimage_levels(delta, max_depth, base=z0, threads=threads):
        depth = lvl.depth
        if depth >= max(min_depth - 2, 1):
            roots.append(increment_root(prev_ld, lvl.log_derivative, bracket))
            if len(roots) >= 3:
                extrap.append(aitken(*roots[-3:]))
            if len(extrap) >= 2 and depth >= min_depth:
                err = abs(extrap[-1] - extrap[-2])
                if err < target_tol:
                    converged = True
                    break
        prev_ld = lvl.log_derivative
    if not extrap:
        raise ValueError("max_depth too small for extrapolation")
    if not converged:
        warnings.warn(f"dimension not converged to {target_tol:g} by depth {depth} "
                      f"(last change {err:.2e})", DepthCapWarning)
    return DimensionEstimate(delta, extrap[-1], depth, err, roots, extrap, converged, z0)


@dataclass
class ScanRow:
    alpha: float
    t: float
    d: float
    err: float
    depth: int
    seconds: float
    error: str = ""


def dimension_scan(rays, tol: float = 1e-6, max_depth: int = 22, threads: int = 1):
    """Dimension along a list of RayParameter (or (alpha, t) pairs); a failing
    row is recorded with its message and the scan continues."""
    rows = []
    for ray in rays:
        if not isinstance(ray, RayParameter):
            ray = RayParameter(*ray)
        t0 = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DepthCapWarning)
                est = dimension(ray.delta, tol, max_depth=max_depth, threads=threads)
            rows.append(ScanRow(ray.alpha, ray.t, est.d_value, est.extrapolation_error,
                                est.depth_used, time.perf_counter() - t0))
        except (ValueError, ArithmeticError) as exc:
            rows.append(ScanRow(ray.alpha, ray.t, math.nan, math.nan, 0,
                                time.perf_counter() - t0, str(exc)))
    return rows


def fit_sqrt_law(ts, ds) -> float:
    """Least-squares c in 1 - d = c sqrt(t)."""
    ts = np.asarray(ts, dtype=float)
    ds = np.asarray(ds, dtype=float)
    x = np.sqrt(ts)
    return float(np.dot(x, 1 - ds) / np.dot(x, x))
