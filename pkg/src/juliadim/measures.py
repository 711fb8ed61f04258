"""Atomic discretizations of the conformal measure omega and the invariant
measure mu = h omega, both normalized to total mass 4.

Conformal atoms sit at the depth-n preimages z_w of the base point with
weight proportional to |(f^n)'(z_w)|^(-d). The density h is the transfer
operator applied m times to the constant 1:

    h_m(z) = sum over y in f^{-m}(z) of |(f^m)'(y)|^(-d),

evaluated at the atoms by expanding each atom's own preimage tree, then
renormalized so that sum(omega_w h_w) = 4.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._numerics import block_sums, csqrt, stable_sum
from .dynamics import TreeLevel, _as_delta, default_base, expand_level, tree_level

TOTAL_MASS = 4.0
DENSITY_TOL = 1e-4
MAX_DENSITY_ITER = 12
CHUNK_LEAVES = 1 << 20


class DensityConvergenceWarning(RuntimeWarning):
    pass


class IntegrandError(FloatingPointError):
    pass


@dataclass
class MeasureAtoms:
    delta: complex
    exponent: float
    points: np.ndarray
    weights: np.ndarray
    kind: str = "conformal"
    depth: int = 0
    codes: np.ndarray | None = None
    motion: np.ndarray | None = None      # velocity of each atom in delta
    density: np.ndarray | None = None     # h at each atom (invariant atoms)
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    @property
    def total_mass(self) -> float:
        return stable_sum(self.weights)

    def scaled(self, factor: float) -> "MeasureAtoms":
        return MeasureAtoms(self.delta, self.exponent, self.points, self.weights * factor,
                            self.kind, self.depth, self.codes, self.motion, self.density,
                            dict(self.diagnostics))

    def restrict(self, mask) -> "MeasureAtoms":
        sel = lambda a: None if a is None else a[mask]
        return MeasureAtoms(self.delta, self.exponent, self.points[mask], self.weights[mask],
                            self.kind, self.depth, sel(self.codes), sel(self.motion),
                            sel(self.density), dict(self.diagnostics))

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im", "weight", "kind"])
        for z, wt in zip(self.points, self.weights):
            w.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(wt)), self.kind])

    def summary(self) -> dict:
        out = {"delta": [self.delta.real, self.delta.imag], "exponent": self.exponent,
               "kind": self.kind, "depth": self.depth, "atoms": len(self), "mass": self.total_mass}
        out.update(self.diagnostics)
        return out

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, default=float)


def _normalized(logw: np.ndarray) -> np.ndarray:
    w = np.exp(logw - np.max(logw))
    return w * (TOTAL_MASS / stable_sum(w))


def conformal_atoms(delta, d: float, depth: int, base=None, motion: bool = False,
                    threads: int = 1) -> MeasureAtoms:
    """Weights proportional to |(f^n)'(z_w)|^(-d), total mass 4."""
    delta = _as_delta(delta)
    z0 = default_base(delta) if base is None else complex(base)
    lvl = tree_level(delta, depth, base=z0, motion=motion, threads=threads)
    w = _normalized(-d * lvl.log_derivative)
    return MeasureAtoms(delta, d, lvl.points, w, "conformal", depth,
                        np.arange(len(w), dtype=np.int64), lvl.motion,
                        diagnostics={"base": [z0.real, z0.imag]})


def transfer_iterates(delta, d: float, points, m: int, threads: int = 1) -> np.ndarray:
    """Rows k = 1..m of (L^k 1)(z) at each z, L the transfer operator with
    potential -d log|f'|. Work is chunked so memory stays bounded."""
    delta = _as_delta(delta)
    points = np.asarray(points, dtype=complex).ravel()
    out = np.empty((m, len(points)))
    per_chunk = max(1, CHUNK_LEAVES >> m)
    for lo in range(0, len(points), per_chunk):
        chunk = points[lo:lo + per_chunk]
        lvl = TreeLevel(0, chunk, np.zeros(len(chunk)))
        for k in range(1, m + 1):
            lvl = expand_level(delta, lvl, threads)
            out[k - 1, lo:lo + len(chunk)] = block_sums(np.exp(-d * lvl.log_derivative), 1 << k)
    return out


def invariant_density(delta, d: float, atoms: MeasureAtoms, m: int | None = None,
                      tol: float = DENSITY_TOL, max_m: int = MAX_DENSITY_ITER,
                      strict: bool = False, threads: int = 1) -> MeasureAtoms:
    """Invariant atoms omega_w h(z_w) with h = L^m 1, renormalized to mass 4.

    With m None the smallest m whose relative sup-change from m-1 is below
    tol is used (up to max_m).
    """
    delta = _as_delta(delta)
    top = m if m is not None else max_m
    if top < 1:
        raise ValueError("m must be >= 1")
    rows = transfer_iterates(delta, d, atoms.points, top, threads)
    om = atoms.weights
    hs = rows * (TOTAL_MASS / np.array([stable_sum(om * r) for r in rows]))[:, None]
    changes = [math.inf] + [float(np.max(np.abs(hs[k] - hs[k - 1]) / np.abs(hs[k])))
                            for k in range(1, top)]
    if m is None:
        used = next((k + 1 for k in range(1, top) if changes[k] < tol), top)
    else:
        used = m
    change = changes[used - 1]
    converged = change < tol
    if not converged:
        msg = f"density sup-change {change:.2e} at m = {used} exceeds {tol:g}"
        if strict:
            raise ArithmeticError(msg)
        warnings.warn(msg, DensityConvergenceWarning)
    h = hs[used - 1]
    mu = om * h
    mu = mu * (TOTAL_MASS / stable_sum(mu))
    diag = dict(atoms.diagnostics)
    diag.update({"m": used, "sup_change": change, "density_converged": converged,
                 "sup_changes": [c for c in changes[1:]]})
    return MeasureAtoms(delta, d, atoms.points, mu, "invariant", atoms.depth, atoms.codes,
                        atoms.motion, h, diag)


def density_at(delta, d: float, z, atoms: MeasureAtoms, m: int = 10, threads: int = 1):
    """h(z) = L^m 1(z), normalized against the conformal atoms."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    num = transfer_iterates(delta, d, z, m, threads)[-1]
    ref = transfer_iterates(delta, d, atoms.points, m, threads)[-1]
    h = num * TOTAL_MASS / stable_sum(atoms.weights * ref)
    return h if h.size > 1 else float(h[0])


@dataclass
class RescaledMeasure:
    base: MeasureAtoms
    scale: float                 # sqrt|delta|

    @property
    def points(self) -> np.ndarray:
        return self.base.points / self.scale

    @property
    def weights(self) -> np.ndarray:
        return self.base.weights * abs(self.base.delta) ** (-self.base.exponent / 2)

    def mass(self, mask=None) -> float:
        w = self.weights if mask is None else self.weights[mask]
        return stable_sum(w)


def rescale_measure(atoms: MeasureAtoms) -> RescaledMeasure:
    if atoms.delta == 0:
        raise ValueError("rescaling needs delta != 0")
    return RescaledMeasure(atoms, math.sqrt(abs(atoms.delta)))


def integrate(atoms, integrand, mask=None) -> float:
    """sum of weight * integrand(z) with a compensated fixed-order sum.

    `integrand` is called once on the array of atom positions.
    """
    pts = atoms.points
    w = atoms.weights
    if mask is not None:
        pts, w = pts[mask], w[mask]
    if len(pts) == 0:
        return 0.0
    vals = np.asarray(integrand(pts), dtype=float)
    if vals.shape == ():
        vals = np.full(len(pts), float(vals))
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = bad[0]
        raise IntegrandError(f"integrand is not finite at atom {i} (z = {pts[i]!r})")
    return stable_sum(w * vals)


# ---------------------------------------------------------------------------
# residual diagnostics

def conformality_residual(atoms: MeasureAtoms, n: int) -> float:
    """|omega(f A) - int_A |f'|^d d omega| / omega(f A) for A the cylinder with
    word - +^n - (so f A is the cylinder +^n -)."""
    from .cylinders import CylinderId, pattern_mask
    if atoms.codes is None or n < 1:
        raise ValueError("needs labelled atoms and n >= 1")
    A = pattern_mask(atoms.codes, CylinderId("minus2", n).pattern())
    fA = pattern_mask(atoms.codes, CylinderId("plus2", n - 1).pattern())
    lhs = stable_sum(atoms.weights[fA])
    rhs = stable_sum(atoms.weights[A] * np.abs(2 * atoms.points[A]) ** atoms.exponent)
    return abs(lhs - rhs) / lhs


def invariance_residual(atoms: MeasureAtoms, u) -> float:
    """|int u o f d mu - int u d mu| relative to int |u| d mu."""
    delta = atoms.delta
    img = atoms.points ** 2 - 2 + delta
    a = stable_sum(atoms.weights * u(img))
    b = stable_sum(atoms.weights * u(atoms.points))
    scale = stable_sum(atoms.weights * np.abs(u(atoms.points)))
    return abs(a - b) / scale


def ks_distance(x: np.ndarray, w: np.ndarray, cdf) -> float:
    """Kolmogorov-Smirnov distance between weighted atoms on R and a cdf."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ws = w[order] / stable_sum(w)
    upper = np.cumsum(ws)
    lower = upper - ws
    F = cdf(xs)
    return float(max(np.max(np.abs(upper - F)), np.max(np.abs(lower - F))))


def lebesgue_cdf(x):
    return np.clip((np.asarray(x) + 2) / 4, 0, 1)


def arcsine_cdf(x):
    return 0.5 + np.arcsin(np.clip(np.asarray(x) / 2, -1, 1)) / np.pi


def chebyshev_density(x):
    """Density of mu_0 with respect to Lebesgue measure on [-2, 2] (mass 4)."""
    return (2 / np.pi) / np.sqrt(1 - (np.asarray(x) / 2) ** 2)
