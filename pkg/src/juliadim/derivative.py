"""Directional derivative of the dimension along a ray.

Each Julia point moves holomorphically with delta; its velocity is

    phi_dot(z) = -sum_{k=1}^{m} 1 / (f^k)'(z) + phi_dot(f^m z) / (f^m)'(z).

With v = e^{i alpha}, the derivative of log|f'| along the ray at a Julia point
is Re(v phi_dot(z) / z), and

    d'_v = -d * int Re(v phi_dot / z) d mu / int log|f'| d mu.

The formula route evaluates this against invariant atoms; the finite
difference route differentiates the dimension itself.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._numerics import stable_sum
from .asymptotics import key_integral, omega
from .dynamics import RayParameter, _as_delta, fixed_point
from .measures import (DensityConvergenceWarning, MeasureAtoms, conformal_atoms, integrate,
                       invariant_density)
from .pressure import DepthCapWarning, dimension

SUP_BUDGET = 100.0         # assumed bound on |phi_dot| for the tail estimate
SERIES_TOL = 1e-8
SERIES_CAP = 200
NEAR_ZERO = 1e-9
DIVISION_GUARD = 1e-12
EXCLUDED_MASS_LIMIT = 1e-3


class SeriesError(ArithmeticError):
    def __init__(self, message, hitting_time=None):
        super().__init__(message)
        self.hitting_time = hitting_time


@dataclass
class PhiDotSeries:
    z: complex
    m: int
    value: complex
    partial_sums: list
    remainder_bound: float


def phi_dot(delta, z, m: int | None = None, budget: float = SUP_BUDGET,
            tol: float = SERIES_TOL, cap: int = SERIES_CAP) -> PhiDotSeries:
    """Forward-orbit series for the velocity of a Julia point.

    With m None the series is extended until budget / |(f^m)'(z)| < tol.
    """
    delta = _as_delta(delta)
    z = complex(z)
    w = z
    deriv = 1.0 + 0j
    total = 0j
    partial = []
    top = cap if m is None else m
    bound = math.inf
    for k in range(1, top + 1):
        if abs(w) < NEAR_ZERO:
            raise SeriesError(f"orbit passes within {NEAR_ZERO:g} of 0 at step {k - 1}", k - 1)
        deriv *= 2 * w
        w = w * w - 2 + delta
        total -= 1.0 / deriv
        partial.append(total)
        bound = budget / abs(deriv)
        if m is None and bound < tol:
            break
    if m is None and bound >= tol:
        raise SeriesError(f"remainder bound {bound:.2e} above {tol:g} after {cap} terms")
    return PhiDotSeries(z, len(partial), total, partial, bound)


def integrand_f1(delta, z, phi_dot_value, alpha: float | None = None):
    """Re(v phi_dot / z); v = e^{i arg delta} unless alpha is given."""
    delta = _as_delta(delta)
    if alpha is None:
        if delta == 0:
            raise ValueError("direction undefined at delta = 0; pass alpha")
        v = delta / abs(delta)
    else:
        v = RayParameter(alpha, 1.0).direction
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) < DIVISION_GUARD):
        raise ZeroDivisionError("integrand evaluated at |z| < 1e-12")
    out = (v * np.asarray(phi_dot_value) / z).real
    return float(out) if out.ndim == 0 else out


@dataclass
class DerivativeEstimate:
    ray: RayParameter
    method: str
    value: float
    err: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def scaled(self) -> float:
        return math.sqrt(self.ray.t) * self.value

    @property
    def scaled_err(self) -> float:
        return math.sqrt(self.ray.t) * self.err

    def row(self) -> dict:
        dg = self.diagnostics
        return {"alpha": self.ray.alpha, "t": self.ray.t, "method": self.method,
                "dprime": self.value, "scaled": self.scaled, "err": self.err,
                "num": dg.get("num", math.nan), "den": dg.get("den", math.nan),
                "excluded_mass": dg.get("excluded_mass", 0.0)}


def _as_ray(ray) -> RayParameter:
    return ray if isinstance(ray, RayParameter) else RayParameter(*ray)


def _dimension_value(delta, depth: int, tol: float) -> tuple[float, float]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DepthCapWarning)
        est = dimension(delta, tol, max_depth=depth)
    return est.d_value, est.extrapolation_error


def invariant_atoms(delta, d: float, atom_depth: int, density_tol: float, max_m: int,
                    threads: int = 1) -> MeasureAtoms:
    om = conformal_atoms(delta, d, atom_depth, motion=True, threads=threads)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DensityConvergenceWarning)
        return invariant_density(delta, d, om, tol=density_tol, max_m=max_m, threads=threads)


def formula_terms(mu: MeasureAtoms, alpha: float) -> dict:
    """Numerator and denominator of the derivative formula on given atoms.

    Atoms too close to 0 are dropped and their mass reported.
    """
    ok = np.abs(mu.points) >= DIVISION_GUARD
    if mu.motion is not None:
        ok &= np.isfinite(mu.motion)
    excluded = stable_sum(mu.weights[~ok])
    v = RayParameter(alpha, 1.0).direction
    num = integrate(mu, lambda z: (v * mu.motion[ok] / z).real, mask=ok)
    den = integrate(mu, lambda z: np.log(np.abs(2 * z)), mask=ok)
    return {"num": num, "den": den, "excluded_mass": excluded / stable_sum(mu.weights)}


def derivative_formula(ray, depth: int = 22, atom_depth: int = 14, tol: float = 1e-9,
                       density_tol: float = 1e-4, max_m: int = 10,
                       threads: int = 1) -> DerivativeEstimate:
    """-d * int Re(v phi_dot / z) d mu / int log|f'| d mu.

    The dimension comes from the pressure module at `depth`; invariant atoms
    live at `atom_depth` with up to `max_m` transfer-operator steps. The
    error bar is the change when the atom depth is lowered by two.
    """
    ray = _as_ray(ray)
    delta = ray.delta
    d, d_err = _dimension_value(delta, depth, tol)
    vals = []
    for n in (atom_depth, atom_depth - 2):
        mu = invariant_atoms(delta, d, n, density_tol, max_m, threads)
        terms = formula_terms(mu, ray.alpha)
        if terms["excluded_mass"] > EXCLUDED_MASS_LIMIT:
            raise ArithmeticError(f"excluded mass {terms['excluded_mass']:.2e} above 0.1%")
        vals.append((-d * terms["num"] / terms["den"], terms, mu.diagnostics))
    value, terms, diag = vals[0]
    err = abs(vals[0][0] - vals[1][0])
    return DerivativeEstimate(ray, "formula", value, err, {
        "d": d, "d_err": d_err, "num": terms["num"], "den": terms["den"],
        "excluded_mass": terms["excluded_mass"], "atom_depth": atom_depth,
        "m": diag.get("m"), "density_sup_change": diag.get("sup_change")})


def derivative_fd(ray, h: float | None = None, tol: float = 1e-6, depth: int = 22) -> DerivativeEstimate:
    """Central difference of the dimension along the ray, with step h and h/2
    combined by Richardson extrapolation."""
    ray = _as_ray(ray)
    t = ray.t
    if h is None:
        h = t / 5
    if not 0 < h < t:
        raise ValueError("need 0 < h < t")
    dtol = tol / 10
    dims = {}
    for s in (h, h / 2):
        for sg in (1, -1):
            dims[(s, sg)] = _dimension_value(ray.moved(t + sg * s).delta, depth, dtol)
    D = lambda s: (dims[(s, 1)][0] - dims[(s, -1)][0]) / (2 * s)
    d1, d2 = D(h), D(h / 2)
    value = (4 * d2 - d1) / 3
    noise = max(e for _, e in dims.values())
    err = abs(d1 - d2) / 3 + 2 * noise / h
    jump = abs(dims[(h / 2, 1)][0] - dims[(h / 2, -1)][0])
    return DerivativeEstimate(ray, "finite_difference", value, err, {
        "h": h, "D_h": d1, "D_h2": d2, "dim_err": noise,
        "noise_dominated": jump < 20 * noise, "num": math.nan, "den": math.nan,
        "excluded_mass": 0.0})


@dataclass
class KeyIntegralReport:
    ray: RayParameter
    R: float
    scaled: float            # |delta|^(1 - d/2) * int over the window
    scaled_half: float       # same with |delta|^(1/2)
    target: float            # (2/pi) I_{alpha,R}
    motion_scaled: float     # window integral of Re(v phi_dot / z), scaled
    motion_target: float     # (1/3)(2/pi) I_{alpha,R}
    window_atoms: int
    d: float

    @property
    def gap(self) -> float:
        return abs(self.scaled - self.target) / abs(self.target)

    @property
    def motion_gap(self) -> float:
        return abs(self.motion_scaled - self.motion_target) / abs(self.motion_target)


def key_integral_check(ray, R: float = 2.0, depth: int = 22, atom_depth: int = 14,
                       density_tol: float = 1e-4, max_m: int = 8, tol: float = 1e-8,
                       threads: int = 1) -> KeyIntegralReport:
    """Window integral of Re(-v/z^2) against mu, rescaled, versus its limit."""
    ray = _as_ray(ray)
    delta = ray.delta
    if delta == 0:
        raise ValueError("needs delta != 0")
    d, _ = _dimension_value(delta, depth, tol)
    mu = invariant_atoms(delta, d, atom_depth, density_tol, max_m, threads)
    win = np.abs(mu.points.real) <= R * math.sqrt(ray.t)
    if win.sum() < 50:
        warnings.warn(f"only {int(win.sum())} atoms in the window")
    v = ray.direction
    raw = integrate(mu, lambda z: (-v / z ** 2).real, mask=win)
    mot = integrate(mu, lambda z: (v * mu.motion[win] / z).real, mask=win)
    target = 2 / math.pi * key_integral(min(ray.alpha, 2 * math.pi - ray.alpha), R).value
    return KeyIntegralReport(ray, R, ray.t ** (1 - d / 2) * raw, ray.t ** 0.5 * raw, target,
                             ray.t ** (1 - d / 2) * mot, target / 3, int(win.sum()), d)


def outside_window_tail(ray, Rs, depth: int = 22, atom_depth: int = 14, max_m: int = 8,
                        tol: float = 1e-8) -> list[float]:
    """|delta|^(1-d/2) times the integral of |phi_dot / z| outside each window."""
    ray = _as_ray(ray)
    d, _ = _dimension_value(ray.delta, depth, tol)
    mu = invariant_atoms(ray.delta, d, atom_depth, 1e-4, max_m)
    out = []
    for R in Rs:
        outside = np.abs(mu.points.real) > R * math.sqrt(ray.t)
        val = integrate(mu, lambda z: np.abs(mu.motion[outside] / z), mask=outside)
        out.append(ray.t ** (1 - d / 2) * val)
    return out


def write_derivative_csv(fh, estimates) -> None:
    w = csv.writer(fh, lineterminator="\n")
    cols = ["alpha", "t", "method", "dprime", "scaled", "err", "num", "den", "excluded_mass"]
    w.writerow(cols)
    for e in estimates:
        r = e.row()
        w.writerow([r[c] if isinstance(r[c], str) else repr(float(r[c])) for c in cols])


def omega_ratio(est: DerivativeEstimate) -> float:
    return est.scaled / omega(est.ray.alpha)
