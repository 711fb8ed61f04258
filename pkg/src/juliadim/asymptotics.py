"""Closed-form limits: the angular profile Omega(alpha), its zero, the
hyperbola integrals I_{alpha,R} and I_alpha, and the K constants.

Integrals of sqrt(sin x) are computed after the substitution x = u^2 near 0
(and pi - x = u^2 near pi), which turns the square-root endpoint into a
smooth integrand. Two schemes are provided: adaptive Gauss-Legendre
bisection and a fixed composite high-order rule; they are cross-checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

LOG2 = math.log(2.0)
SQRT6 = math.sqrt(6.0)
OMEGA_SCALE = 1.0 / (SQRT6 * math.pi * LOG2)            # 1/(sqrt6 pi log2)
REAL_RAY_COEFFICIENT = SQRT6 / (3.0 * math.pi * LOG2)    # sqrt6/(3 pi log2)
QUAD_TOL = 1e-13


class QuadratureError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _panel(g, a: float, b: float, n: int) -> float:
    x, w = _gauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(w, g(mid + half * x)))


def adaptive_quad(g, a: float, b: float, tol: float = QUAD_TOL, max_panels: int = 20000) -> float:
    """Adaptive bisection; a panel is accepted when its 10- and 20-point
    Gauss-Legendre values agree to its share of the tolerance."""
    if a == b:
        return 0.0
    total = []
    stack = [(a, b)]
    width = abs(b - a)
    done = 0
    while stack:
        lo, hi = stack.pop()
        coarse = _panel(g, lo, hi, 10)
        fine = _panel(g, lo, hi, 20)
        share = tol * max(abs(hi - lo) / width, 1e-6)
        if abs(fine - coarse) <= share or abs(hi - lo) < 1e-14 * max(1.0, abs(lo)):
            total.append(fine)
            done += 1
            continue
        if len(stack) + done > max_panels:
            raise QuadratureError("adaptive quadrature exceeded its panel budget")
        m = 0.5 * (lo + hi)
        stack.append((m, hi))
        stack.append((lo, m))
    return math.fsum(total)


def fixed_quad(g, a: float, b: float, panels: int = 16, order: int = 48) -> float:
    """Composite Gauss-Legendre rule on equal panels (no adaptivity)."""
    if a == b:
        return 0.0
    edges = np.linspace(a, b, panels + 1)
    return math.fsum(_panel(g, lo, hi, order) for lo, hi in zip(edges[:-1], edges[1:]))


def _flattened(u):
    # x = u^2 (or pi - x = u^2): dx = 2u du, sqrt(sin x) dx = 2u sqrt(sin u^2) du
    return 2.0 * u * np.sqrt(np.sin(u * u))


def sqrt_sin_integral(a: float, b: float, scheme: str = "adaptive", tol: float = QUAD_TOL) -> float:
    """Integral of sqrt(sin x) over [a, b], 0 <= a <= b <= pi."""
    if not (0.0 <= a <= b <= math.pi + 1e-15):
        raise ValueError("need 0 <= a <= b <= pi")
    b = min(b, math.pi)
    if a == b:
        return 0.0
    quad = adaptive_quad if scheme == "adaptive" else fixed_quad
    kw = {"tol": tol} if scheme == "adaptive" else {}
    half = 0.5 * math.pi
    parts = []
    if a < half:
        parts.append(quad(_flattened, math.sqrt(a), math.sqrt(min(b, half)), **kw))
    if b > half:
        lo = max(a, half)
        parts.append(quad(_flattened, math.sqrt(math.pi - b), math.sqrt(math.pi - lo), **kw))
    return math.fsum(parts)


def sqrt_sin_integral_exact_full() -> float:
    """B(3/4, 1/2) = Gamma(3/4) Gamma(1/2) / Gamma(5/4)."""
    return math.gamma(0.75) * math.gamma(0.5) / math.gamma(1.25)


# ---------------------------------------------------------------------------
# Omega

def _fold(alpha: float) -> float:
    if not (0.0 < alpha < 2 * math.pi):
        raise ValueError("alpha must lie in the open interval (0, 2pi)")
    return alpha if alpha <= math.pi else 2 * math.pi - alpha


def omega(alpha: float, scheme: str = "adaptive") -> float:
    """Limit of sqrt|delta| * d'_v(delta) along the ray of angle alpha."""
    a = _fold(float(alpha))
    if a == math.pi:
        return -OMEGA_SCALE
    s = math.sin(a)
    return OMEGA_SCALE * (math.cos(a) - 0.5 * math.sqrt(s) * sqrt_sin_integral(a, math.pi, scheme))


def omega_limit_at_zero() -> float:
    return OMEGA_SCALE


@dataclass
class OmegaProfile:
    alphas: np.ndarray
    values: np.ndarray
    tol: float = QUAD_TOL

    def rows(self):
        return list(zip(self.alphas.tolist(), self.values.tolist()))


def omega_profile(alphas) -> OmegaProfile:
    alphas = np.asarray(alphas, dtype=float)
    return OmegaProfile(alphas, np.array([omega(a) for a in alphas]))


def default_grid(n: int = 500) -> np.ndarray:
    """n interior points of (0, 2pi), exactly mirrored about pi.

    The lower half is 2pi minus the upper half; that subtraction is exact, so
    omega takes bit-identical values on mirrored points.
    """
    if n < 1:
        raise ValueError("grid needs at least one point")
    full = (np.arange(n) + 0.5) * (2 * math.pi / n)
    upper = full[n - n // 2:]
    mid = [math.pi] if n % 2 else []
    return np.concatenate([2 * math.pi - upper[::-1], mid, upper])


def alpha_zero(tol: float = 1e-12, scan_step: float = 1e-2) -> float:
    """The unique zero of Omega in (0, pi/2)."""
    if tol < 1e-14:
        raise ValueError("tol below 1e-14 is not meaningful")
    grid = np.arange(scan_step, 0.5 * math.pi + 1e-12, scan_step)
    vals = np.array([omega(a) for a in grid])
    changes = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if len(changes) != 1:
        raise RuntimeError(f"expected one sign change of Omega on (0, pi/2), found {len(changes)}")
    i = changes[0]
    return brentq(omega, grid[i], grid[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps)


# ---------------------------------------------------------------------------
# key integrals

@dataclass(frozen=True)
class KeyIntegralValue:
    alpha: float
    R: float | None
    value: float
    gamma: float | None
    kind: str


def hyperbola_angle(alpha: float, R: float) -> float:
    """gamma = arctan(sin(alpha) / (3 R^2))."""
    if alpha == math.pi:
        return 0.0
    return math.atan(math.sin(alpha) / (3.0 * R * R))


def key_integral(alpha: float, R: float | None = None, kind: str = "finite_R") -> KeyIntegralValue:
    """I_{alpha,R} (finite_R) or its R -> infinity limit I_alpha (limit_R)."""
    if not (0.0 < alpha <= math.pi):
        raise ValueError("alpha must lie in (0, pi]")
    if kind == "limit_R":
        s = math.sin(alpha) if alpha < math.pi else 0.0
        val = -SQRT6 * math.cos(alpha)
        if s > 0:
            val += 0.5 * SQRT6 * math.sqrt(s) * sqrt_sin_integral(alpha, math.pi)
        return KeyIntegralValue(alpha, None, val, None, kind)
    if kind != "finite_R":
        raise ValueError(f"unknown kind {kind!r}")
    if R is None or R < 1:
        raise ValueError("finite_R needs R >= 1")
    if alpha == math.pi:
        return KeyIntegralValue(alpha, R, SQRT6 - 2.0 / R, 0.0, kind)
    g = hyperbola_angle(alpha, R)
    s = math.sin(alpha)
    # sqrt(sin 2g / sin a) written without the 0/0 near alpha = pi
    ratio = math.sqrt(2.0 / 3.0) / R / math.sqrt(1.0 + (s / (3 * R * R)) ** 2)
    val = SQRT6 * math.cos(alpha) * (ratio - 1.0)
    val += 0.5 * SQRT6 * math.sqrt(s) * sqrt_sin_integral(alpha, math.pi - 2 * g)
    return KeyIntegralValue(alpha, R, val, g, kind)


def k_constant(alpha: float, R: float, kind: str = "inv_abs") -> float:
    """K_{alpha,R}: inv_abs from the closed form, inv_abs_sq by quadrature."""
    if not (0.0 < alpha <= math.pi) or R < 1:
        raise ValueError("need alpha in (0, pi] and R >= 1")
    if kind == "inv_abs":
        return math.log(1.5) + 2.0 * math.log(R / math.sin(0.5 * alpha))
    if kind != "inv_abs_sq":
        raise ValueError(f"unknown kind {kind!r}")
    if alpha == math.pi:
        return SQRT6 - 2.0 / R
    s = math.sin(alpha)
    g = hyperbola_angle(alpha, R)
    lo, hi = 0.5 * (alpha - math.pi), -g
    integrand = lambda t: 1.0 / np.sqrt(-np.sin(2 * t))
    return 2.0 * math.sqrt(1.5) / math.sqrt(s) * adaptive_quad(integrand, lo, hi)
