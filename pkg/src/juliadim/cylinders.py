"""Cylinder families near +-p and near 0, window sets around the imaginary axis.

Itinerary letters are the signs of Re f^k(z), k = 0, 1, ...; a cylinder is
the set of Julia points whose itinerary starts with a fixed pattern:

    plus2  n : +^{n+1} -
    minus2 n : - +^n -
    zero_plus  0 : + +        zero_plus  n : + - +^{n-1} -   (n >= 1)
    zero_minus 0 : - +        zero_minus n : - - +^{n-1} -   (n >= 1)
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._numerics import csqrt
from .dynamics import (PointSet, _as_delta, fixed_point, julia_sample,
                       tree_level, word_string)

FAMILIES = ("plus2", "minus2", "zero_plus", "zero_minus")
FIXED_POINT_INDEX = math.inf   # sentinel for +-p, which lie in no cylinder
DEFAULT_EXTRA_DEPTH = 10


class SparseWindowWarning(UserWarning):
    pass


class CylinderNotFound(LookupError):
    pass


@dataclass(frozen=True)
class CylinderId:
    family: str
    index: float   # int, or FIXED_POINT_INDEX

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown cylinder family {self.family!r}")
        if self.index != FIXED_POINT_INDEX and (self.index < 0 or int(self.index) != self.index):
            raise ValueError("cylinder index must be a non-negative integer")

    @property
    def is_sentinel(self) -> bool:
        return self.index == FIXED_POINT_INDEX

    def pattern(self) -> str:
        n = int(self.index)
        if self.family == "plus2":
            return "+" * (n + 1) + "-"
        if self.family == "minus2":
            return "-" + "+" * n + "-"
        first = "+" if self.family == "zero_plus" else "-"
        if n == 0:
            return first + "+"
        return first + "-" + "+" * (n - 1) + "-"


def pattern_mask(codes: np.ndarray, pattern: str) -> np.ndarray:
    """Which word codes start with the given itinerary pattern."""
    want = 0
    for k, ch in enumerate(pattern):
        if ch == "-":
            want |= 1 << k
    mask = (1 << len(pattern)) - 1
    return (np.asarray(codes, dtype=np.int64) & mask) == want


@dataclass
class CylinderSample:
    id: CylinderId
    points: np.ndarray
    codes: np.ndarray
    depth: int

    @property
    def diam_estimate(self) -> float:
        return max_pairwise_distance(self.points)

    @property
    def words(self):
        return [word_string(c, self.depth) for c in self.codes]

    def row(self) -> dict:
        a = np.abs(self.points)
        return {"family": self.id.family, "n": int(self.id.index), "count": len(self.points),
                "diam": self.diam_estimate, "min_abs": float(a.min()), "max_abs": float(a.max())}


def max_pairwise_distance(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=complex)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 4096:
        from scipy.spatial import ConvexHull, QhullError
        xy = np.column_stack([pts.real, pts.imag])
        try:
            pts = pts[ConvexHull(xy).vertices]
        except (QhullError, ValueError):
            # collinear samples: the extreme points along the line suffice
            d = pts - pts[0]
            ang = np.angle(d[np.argmax(np.abs(d))])
            proj = (d * np.exp(-1j * ang)).real
            return float(proj.max() - proj.min())
    best = 0.0
    for i in range(0, len(pts), 512):
        block = pts[i:i + 512]
        best = max(best, float(np.abs(block[:, None] - pts[None, :]).max()))
    return best


def cylinder_points(delta, cid: CylinderId, depth: int | None = None, base=None) -> CylinderSample:
    """Depth-`depth` preimages of the base point whose words start with the
    family pattern: the free part is a full tree below the pattern."""
    delta = _as_delta(delta)
    if cid.is_sentinel:
        raise ValueError("the fixed-point sentinel has no sample")
    pat = cid.pattern()
    if depth is None:
        depth = int(cid.index) + DEFAULT_EXTRA_DEPTH
    free = depth - len(pat)
    if free < 0:
        raise ValueError(f"depth {depth} is too small for pattern of length {len(pat)}")
    z0 = fixed_point(delta).p if base is None else complex(base)
    level = tree_level(delta, free, base=z0)
    z = level.points
    for ch in reversed(pat):
        r = csqrt(z + 2 - delta)
        z = r if ch == "+" else -r
    head = 0
    for k, ch in enumerate(pat):
        if ch == "-":
            head |= 1 << k
    codes = head | (np.arange(len(z), dtype=np.int64) << len(pat))
    if len(z) == 0:
        warnings.warn("empty cylinder sample", SparseWindowWarning)
    return CylinderSample(cid, z, codes, depth)


def window_set(delta, R: float, depth: int, base=None, threads: int = 1) -> PointSet:
    """Julia sample restricted to the strip |Re z| <= R sqrt|delta|."""
    delta = _as_delta(delta)
    if delta == 0:
        raise ValueError("window_set needs delta != 0")
    if R < 1:
        raise ValueError("R must be >= 1")
    ps = julia_sample(delta, depth, base=base, threads=threads)
    keep = np.abs(ps.points.real) <= R * math.sqrt(abs(delta))
    if keep.sum() < 50:
        warnings.warn(f"only {int(keep.sum())} points in the window; increase depth",
                      SparseWindowWarning)
    return PointSet(delta, depth, ps.points[keep], ps.codes[keep], ps.mode)


def itinerary(delta, z, length: int) -> str:
    """Signs of Re f^k(z) for k < length ('0' if an iterate hits Re = 0)."""
    delta = _as_delta(delta)
    out = []
    z = complex(z)
    for _ in range(length):
        out.append("+" if z.real > 0 else "-" if z.real < 0 else "0")
        z = z * z - 2 + delta
    return "".join(out)


def _letters(delta, z, limit: int):
    """Signs of Re f^k(z), produced lazily so escaping orbits are never read
    further than needed."""
    for _ in range(limit):
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise CylinderNotFound("orbit escaped before the cylinder was determined")
        if z.real == 0:
            raise CylinderNotFound("orbit meets the imaginary axis")
        yield "+" if z.real > 0 else "-"
        z = z * z - 2 + delta
    raise CylinderNotFound("no cylinder within max_depth")


def _run_of_plus(letters) -> int:
    run = 0
    for ch in letters:
        if ch == "-":
            return run
        run += 1
    raise CylinderNotFound("no cylinder within max_depth")


def cylinder_measure_index(delta, z, partition: str = "pm2", max_depth: int = 60) -> CylinderId:
    """The cylinder containing z, read off its forward itinerary.

    partition 'pm2' uses the families around +-p (with the sentinel for the
    fixed points themselves), 'zero' the families around 0.
    """
    delta = _as_delta(delta)
    z = complex(z)
    if partition not in ("pm2", "zero"):
        raise ValueError(f"unknown partition {partition!r}")
    p = fixed_point(delta).p
    if partition == "pm2":
        for sgn, fam in ((1, "plus2"), (-1, "minus2")):
            if abs(z - sgn * p) <= 1e-12 * (1 + abs(p)):
                return CylinderId(fam, FIXED_POINT_INDEX)
    letters = _letters(delta, z, max_depth + 3)
    first = next(letters)
    if partition == "pm2":
        # first letter, then n letters '+', then '-'
        return CylinderId("plus2" if first == "+" else "minus2", _run_of_plus(letters))
    fam = "zero_plus" if first == "+" else "zero_minus"
    if next(letters) == "+":
        return CylinderId(fam, 0)
    return CylinderId(fam, _run_of_plus(letters) + 1)


def write_cylinder_csv(fh, samples) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["family", "n", "count", "diam", "min_abs", "max_abs"])
    for smp in samples:
        r = smp.row()
        w.writerow([r["family"], r["n"], r["count"], repr(r["diam"]),
                    repr(r["min_abs"]), repr(r["max_abs"])])
