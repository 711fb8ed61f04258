"""Rescaled windows of the Julia set near 0 and their hyperbola limits.

The window N = {z in J : |Re z| <= R sqrt|delta|} divided by sqrt|delta|
accumulates on the arc H of the hyperbola x y = -(1/3) sin(alpha) between
b = sqrt(2/3) (sin(alpha/2) - i cos(alpha/2)) and z = R - i sin(alpha)/(3R),
together with its mirror image -H.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .cylinders import window_set
from .dynamics import RayParameter, _as_delta, fixed_point, julia_sample

HYPERBOLA_PRODUCT = 1.0 / 3.0     # x y = -HYPERBOLA_PRODUCT * sin(alpha)
ARC_SAMPLES = 512
BAND_MAX_ABS_DELTA = 0.05


def _check_alpha(alpha: float):
    if not (0.0 < alpha <= math.pi):
        raise ValueError("alpha must lie in (0, pi]")


def hyperbola_endpoints(alpha: float, R: float):
    """(b*, z*, gamma) for the arc with angle alpha and window half-width R."""
    _check_alpha(alpha)
    if R < 1:
        raise ValueError("R must be >= 1")
    k = HYPERBOLA_PRODUCT
    s = math.sin(alpha) if alpha < math.pi else 0.0
    b = math.sqrt(2 * k) * complex(math.sin(alpha / 2), -math.cos(alpha / 2))
    if alpha == math.pi:
        b = complex(math.sqrt(2 * k), 0.0)
    z = complex(R, -k * s / R)
    gamma = math.atan(k * s / (R * R))
    return b, z, gamma


@dataclass
class HyperbolaArc:
    alpha: float
    R: float
    branch: str = "plus"

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.branch not in ("plus", "minus"):
            raise ValueError("branch is 'plus' or 'minus'")

    @property
    def endpoints(self):
        b, z, _ = hyperbola_endpoints(self.alpha, self.R)
        return (b, z) if self.branch == "plus" else (-b, -z)

    def sample(self, n: int = ARC_SAMPLES) -> np.ndarray:
        """n points uniform in the polar angle t in [(alpha - pi)/2, -gamma]."""
        b, z, gamma = hyperbola_endpoints(self.alpha, self.R)
        if self.alpha == math.pi:
            pts = np.linspace(b.real, self.R, n).astype(complex)
        else:
            k = HYPERBOLA_PRODUCT
            s = math.sin(self.alpha)
            t = np.linspace(0.5 * (self.alpha - math.pi), -gamma, n)
            r = np.sqrt(-2 * k * s / np.sin(2 * t))
            pts = r * np.exp(1j * t)
            pts[0], pts[-1] = b, z
        return pts if self.branch == "plus" else -pts

    def length(self, n: int = 4097) -> float:
        p = self.sample(n)
        return float(np.sum(np.abs(np.diff(p))))


def hyperbola_sample(alpha: float, R: float, n: int = ARC_SAMPLES) -> np.ndarray:
    """Both branches; angles in (pi, 2pi) use the complex conjugate picture."""
    conj = alpha > math.pi
    a = 2 * math.pi - alpha if conj else alpha
    pts = np.concatenate([HyperbolaArc(a, R, "plus").sample(n),
                          HyperbolaArc(a, R, "minus").sample(n)])
    return np.conj(pts) if conj else pts


def hausdorff_distance(X, Y, workers: int = 1) -> float:
    """max of the two directed sup-min distances between finite point sets."""
    X = np.asarray(X, dtype=complex).ravel()
    Y = np.asarray(Y, dtype=complex).ravel()
    if X.size == 0 or Y.size == 0:
        raise ValueError("Hausdorff distance needs two non-empty sets")
    xy = lambda a: np.column_stack([a.real, a.imag])
    dxy, _ = cKDTree(xy(Y)).query(xy(X), workers=workers)
    dyx, _ = cKDTree(xy(X)).query(xy(Y), workers=workers)
    return float(max(dxy.max(), dyx.max()))


def rescaled_window(delta, R: float, depth: int, threads: int = 1) -> np.ndarray:
    """Window points divided by sqrt|delta|."""
    delta = _as_delta(delta)
    ws = window_set(delta, R, depth, threads=threads)
    return ws.points / math.sqrt(abs(delta))


@dataclass
class HausdorffReport:
    delta: complex
    R: float
    d_H: float
    sizes: tuple
    depth: int


def convergence_study(alpha: float, R: float, t_schedule, depth: int, arc_samples: int = ARC_SAMPLES,
                      threads: int = 1) -> list[HausdorffReport]:
    """d_H between the rescaled window and the limit arc along the ray."""
    ts = list(t_schedule)
    if any(b >= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t_schedule must be decreasing")
    arc = hyperbola_sample(alpha, R, arc_samples)
    out = []
    for t in ts:
        delta = RayParameter(alpha, t).delta
        pts = rescaled_window(delta, R, depth, threads)
        out.append(HausdorffReport(delta, R, hausdorff_distance(pts, arc, threads),
                                   (len(pts), len(arc)), depth))
    return out


@dataclass
class BandReport:
    delta: complex
    depth: int
    checked: bool
    right_count: int = 0
    left_count: int = 0
    right_violations: int = 0
    left_violations: int = 0
    real_part_violations: int = 0
    message: str = ""

    @property
    def violations(self) -> int:
        return self.right_violations + self.left_violations + self.real_part_violations


def band_check(delta, depth: int, threads: int = 1) -> BandReport:
    """Thin horizontal bands around +-p near the ends of the Julia set:

    |Im z - Im p| < |delta|^(17/16) when Re z >= Re p - |delta|^(15/16),
    the mirror statement on the left, and |Re z| < Re p + |delta|^2.
    """
    delta = _as_delta(delta)
    a = abs(delta)
    if not (0 < a < BAND_MAX_ABS_DELTA):
        return BandReport(delta, depth, False,
                          message=f"skipped: needs 0 < |delta| < {BAND_MAX_ABS_DELTA}")
    p = fixed_point(delta).p
    z = julia_sample(delta, depth, threads=threads).points
    right = z.real >= p.real - a ** (15 / 16)
    left = z.real <= -p.real + a ** (15 / 16)
    rv = np.abs(z.imag[right] - p.imag) >= a ** (17 / 16)
    lv = np.abs(z.imag[left] + p.imag) >= a ** (17 / 16)
    xv = np.abs(z.real) >= p.real + a * a
    return BandReport(delta, depth, True, int(right.sum()), int(left.sum()),
                      int(rv.sum()), int(lv.sum()), int(xv.sum()))


def svg_overlay(points: np.ndarray, arc: np.ndarray, title: str = "", size: int = 480) -> str:
    """Scatter of the rescaled window over the limit arc, as an SVG string."""
    allp = np.concatenate([points, arc])
    xmin, xmax = float(allp.real.min()), float(allp.real.max())
    ymin, ymax = float(allp.imag.min()), float(allp.imag.max())
    span = max(xmax - xmin, ymax - ymin, 1e-9) * 1.1
    cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
    sx = lambda x: (x - cx) / span * size + size / 2
    sy = lambda y: size / 2 - (y - cy) / span * size
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
           f'<title>{title}</title>', '<rect width="100%" height="100%" fill="white"/>']
    for z in points[:: max(1, len(points) // 4000)]:
        out.append(f'<circle cx="{sx(z.real):.2f}" cy="{sy(z.imag):.2f}" r="1" fill="#1f77b4"/>')
    half = len(arc) // 2
    for seg in (arc[:half], arc[half:]):
        path = " ".join(f"{sx(z.real):.2f},{sy(z.imag):.2f}" for z in seg)
        out.append(f'<polyline points="{path}" fill="none" stroke="#d62728" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out)
