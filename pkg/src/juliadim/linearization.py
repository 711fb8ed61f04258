"""Koenigs linearizing coordinate at the repelling fixed point p.

With u = z - p the map becomes g(u) = u (u + lam); the chart is
Phi(u) = lim lam^n g^{-n}(u) and its inverse is lim g^n(u / lam^n).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._numerics import csqrt
from .dynamics import _as_delta, fixed_point

MAX_TERMS = 60
STEP_TOL = 1e-12
DEFAULT_PARAM_RADIUS = 0.15   # |delta| range where calibration is attempted
CIRCLE_SAMPLES = 64


class ChartRadiusError(ValueError):
    pass


class ChartConvergenceWarning(RuntimeWarning):
    pass


def shifted_map(delta, u):
    """f(u + p) - p, written without cancellation as u (u + lam)."""
    fp = fixed_point(delta)
    return u * (u + fp.lam)


def shifted_inverse(delta, u):
    """Branch of the inverse of shifted_map fixing 0: sqrt(p^2 + u) - p,
    computed as u / (sqrt(p^2 + u) + p)."""
    p = fixed_point(delta).p
    return u / (csqrt(p * p + u) + p)


@dataclass(frozen=True)
class KoenigsChart:
    delta: complex
    r_z: float
    max_terms: int = MAX_TERMS
    tol: float = STEP_TOL

    @property
    def lam(self) -> complex:
        return fixed_point(self.delta).lam

    def _check(self, z):
        if np.any(np.abs(np.asarray(z)) >= self.r_z):
            raise ChartRadiusError(f"|z| must be below r_z = {self.r_z}")

    def forward_terms(self, z, n: int) -> complex:
        """lam^n g^{-n}(z) for a fixed truncation n."""
        lam = self.lam
        u = np.asarray(z, dtype=complex)
        for _ in range(n):
            u = shifted_inverse(self.delta, u)
        return lam ** n * u

    def inverse_terms(self, w, n: int):
        lam = self.lam
        u = np.asarray(w, dtype=complex) / lam ** n
        for _ in range(n):
            u = shifted_map(self.delta, u)
        return u

    def evaluate(self, z, inverse: bool = False):
        """Adaptive truncation: stop once successive values agree to tol."""
        self._check(z)
        z = np.asarray(z, dtype=complex)
        if inverse:
            prev = z
            for n in range(1, self.max_terms + 1):
                cur = self.inverse_terms(z, n)
                if np.all(np.abs(cur - prev) <= self.tol * np.maximum(1.0, np.abs(z))):
                    return cur, n, True
                prev = cur
            return prev, self.max_terms, False
        # forward: reuse the branch iterates, u_n = g^{-n}(z)
        lam = self.lam
        u = z.copy()
        prev = z.copy()
        for n in range(1, self.max_terms + 1):
            u = shifted_inverse(self.delta, u)
            cur = lam ** n * u
            if np.all(np.abs(cur - prev) <= self.tol * np.maximum(1.0, np.abs(z))):
                return cur, n, True
            prev = cur
        return prev, self.max_terms, False


def _finish(value, n, ok, what):
    if not ok:
        warnings.warn(f"{what} did not converge within {n} terms", ChartConvergenceWarning)
    return complex(value) if np.ndim(value) == 0 else value


def koenigs_forward(chart: KoenigsChart, z):
    value, n, ok = chart.evaluate(z, inverse=False)
    return _finish(value, n, ok, "koenigs_forward")


def koenigs_inverse(chart: KoenigsChart, w):
    value, n, ok = chart.evaluate(w, inverse=True)
    return _finish(value, n, ok, "koenigs_inverse")


def _near_identity(delta, r: float) -> bool:
    circle = r * np.exp(2j * np.pi * np.arange(CIRCLE_SAMPLES) / CIRCLE_SAMPLES)
    chart = KoenigsChart(delta, r_z=np.inf)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ChartConvergenceWarning)
        fwd, _, ok1 = chart.evaluate(circle)
        inv, _, ok2 = chart.evaluate(circle, inverse=True)
    if not (np.all(np.isfinite(fwd)) and np.all(np.isfinite(inv))):
        return False
    return bool(np.max(np.abs(fwd / circle - 1)) < 0.5 and np.max(np.abs(inv / circle - 1)) < 0.5)


def calibrate_radius(delta, param_radius: float = DEFAULT_PARAM_RADIUS) -> float:
    """Largest dyadic r <= 1/4 with |Phi(z)/z - 1| < 1/2 and the same for the
    inverse on a 64-point circle of radius r."""
    delta = _as_delta(delta)
    if abs(delta) >= param_radius:
        raise ValueError(f"|delta| must be below {param_radius} for calibration")
    r = 0.25
    while r >= 1e-3:
        if _near_identity(delta, r):
            return r
        r /= 2
    raise ChartRadiusError("no radius >= 1e-3 passes the near-identity test")


def make_chart(delta, param_radius: float = DEFAULT_PARAM_RADIUS) -> KoenigsChart:
    delta = _as_delta(delta)
    return KoenigsChart(delta, calibrate_radius(delta, param_radius))
