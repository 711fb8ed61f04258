"""The family f(z) = z**2 - 2 + delta: fixed points, orbits, inverse branches,
escape geometry and preimage-tree sampling of the Julia set."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np

from ._numerics import chunked_apply, csqrt, unit_direction

ESCAPE_RADIUS = 1e8
MAX_FULL_TREE_DEPTH = 24
MAX_WORD_DEPTH = 63


class BranchError(ValueError):
    """An inverse branch was asked for at the critical value."""

    def __init__(self, message: str, word: str | None = None):
        super().__init__(message if word is None else f"{message} (word {word})")
        self.word = word


@dataclass(frozen=True)
class RayParameter:
    """delta = t * exp(i alpha), alpha in (0, 2 pi), t >= 0."""

    alpha: float
    t: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 2 * math.pi):
            raise ValueError(f"alpha must lie in (0, 2pi), got {self.alpha}")
        if not self.t >= 0.0:
            raise ValueError(f"t must be non-negative, got {self.t}")

    @property
    def direction(self) -> complex:
        return unit_direction(self.alpha)

    @property
    def delta(self) -> complex:
        return self.t * self.direction

    def moved(self, t: float) -> "RayParameter":
        return RayParameter(self.alpha, t)


@dataclass(frozen=True)
class FixedPointData:
    p: complex
    lam: complex

    @property
    def multiplier(self) -> complex:
        return self.lam


@dataclass(frozen=True)
class Ellipse:
    """Filled ellipse with foci at +-2: x^2/(r+1/r)^2 + y^2/(r-1/r)^2 <= 1."""

    r: float

    def __post_init__(self):
        if not self.r > 1.0:
            raise ValueError("ellipse parameter r must exceed 1")

    @property
    def semi_major(self) -> float:
        return self.r + 1.0 / self.r

    @property
    def semi_minor(self) -> float:
        return self.r - 1.0 / self.r

    def contains(self, z) -> np.ndarray | bool:
        z = np.asarray(z, dtype=complex)
        q = (z.real / self.semi_major) ** 2 + (z.imag / self.semi_minor) ** 2
        out = q <= 1.0
        return bool(out) if out.ndim == 0 else out


class EscapeStatus(str, Enum):
    INSIDE_BOUND = "inside_bound"
    ESCAPED = "escaped"


def _as_delta(delta) -> complex:
    if isinstance(delta, RayParameter):
        return delta.delta
    return complex(delta)


def fixed_point(delta) -> FixedPointData:
    """Repelling fixed point p (p -> 2 as delta -> 0) and its multiplier 2p."""
    delta = _as_delta(delta)
    if abs(delta) >= 9 / 4:
        raise ValueError("fixed_point needs |delta| < 9/4")
    p = 0.5 + 1.5 * csqrt(1 - 4 * delta / 9)
    return FixedPointData(p=p, lam=2 * p)


def other_fixed_point(delta) -> complex:
    """The second fixed point, 1 - p (equal to -1 at delta = 0)."""
    return 1.0 - fixed_point(delta).p


def apply(delta, z, n: int = 1):
    """n-th iterate of f. Orbits leaving |z| > ESCAPE_RADIUS stop there."""
    if n < 0:
        raise ValueError("n must be >= 0")
    delta = _as_delta(delta)
    if np.ndim(z) == 0:
        z = complex(z)
        for _ in range(n):
            if abs(z) > ESCAPE_RADIUS:
                break
            z = z * z - 2 + delta
        return z
    z = np.array(z, dtype=complex)
    for _ in range(n):
        live = np.abs(z) <= ESCAPE_RADIUS
        if not live.any():
            break
        z[live] = z[live] ** 2 - 2 + delta
    return z


def orbit_derivative(delta, z, n: int):
    """(f^n)'(z) as the product of 2 f^k(z), k < n (stops after escape)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    delta = _as_delta(delta)
    if np.ndim(z) == 0:
        z = complex(z)
        d = 1.0 + 0j
        for _ in range(n):
            d *= 2 * z
            if abs(z) > ESCAPE_RADIUS:
                break
            z = z * z - 2 + delta
        return d
    z = np.array(z, dtype=complex)
    d = np.ones_like(z)
    for _ in range(n):
        live = np.abs(z) <= ESCAPE_RADIUS
        d[live] *= 2 * z[live]
        z[live] = z[live] ** 2 - 2 + delta
    return d


def _sign_value(sign) -> int:
    if sign in ("+", 1, +1.0):
        return 1
    if sign in ("-", "−", -1, -1.0):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def inverse_branch(delta, w, sign):
    """The preimage of w under f with Re > 0 (sign '+') or Re < 0 (sign '-')."""
    delta = _as_delta(delta)
    s = _sign_value(sign)
    arg = np.asarray(w, dtype=complex) + 2 - delta
    if np.any(arg == 0):
        raise BranchError("inverse branch requested at the critical value")
    r = csqrt(arg)
    return s * r


def escape_ellipse(delta) -> Ellipse:
    delta = _as_delta(delta)
    if delta == 0:
        raise ValueError("the escape ellipse degenerates at delta = 0")
    return Ellipse(1.0 + math.sqrt(abs(delta)))


def escape_test(delta, z) -> EscapeStatus:
    """ESCAPED when z lies outside the ellipse E_{1+sqrt|delta|}."""
    inside = escape_ellipse(delta).contains(z)
    return EscapeStatus.INSIDE_BOUND if inside else EscapeStatus.ESCAPED


def critical_orbit_escapes(delta, max_iter: int = 1000) -> bool:
    """Admissibility proxy: the critical orbit leaves the escape ellipse."""
    delta = _as_delta(delta)
    if delta == 0:
        return False
    ell = escape_ellipse(delta)
    z = 0j
    for _ in range(max_iter):
        z = z * z - 2 + delta
        if abs(z) > ESCAPE_RADIUS or not ell.contains(z):
            return True
    return False


def is_admissible(delta) -> bool:
    """delta = 0 is the analytic ground truth; otherwise the orbit proxy."""
    delta = _as_delta(delta)
    return delta == 0 or critical_orbit_escapes(delta)


# ---------------------------------------------------------------------------
# words

def word_string(code: int, depth: int) -> str:
    """Letter k (k = 1..depth) is bit k-1 of the code: 0 -> '+', 1 -> '-'."""
    return "".join("-" if (int(code) >> k) & 1 else "+" for k in range(depth))


def word_code(word: str) -> int:
    code = 0
    for k, ch in enumerate(word):
        if _sign_value(ch) < 0:
            code |= 1 << k
    return code


def apply_word(delta, word: str, z0):
    """f_{s1}^{-1} o ... o f_{sn}^{-1}(z0) for word s1...sn."""
    delta = _as_delta(delta)
    z = np.asarray(z0, dtype=complex)
    for ch in reversed(word):
        arg = z + 2 - delta
        if np.any(arg == 0) and delta != 0:
            raise BranchError("critical value hit", word)
        z = np.asarray(_sign_value(ch) * csqrt(arg))
    return complex(z) if z.ndim == 0 else z


# ---------------------------------------------------------------------------
# preimage tree

@dataclass
class TreeLevel:
    """All preimages of the base point at one depth.

    Children of node i sit at 2i ('+') and 2i+1 ('-'), so the node index is
    also the word code and node >> m is its image under f^m.
    """

    depth: int
    points: np.ndarray
    log_derivative: np.ndarray
    motion: np.ndarray | None = None


def default_base(delta) -> complex:
    """Base point for inverse iteration: p, except at delta = 0 where p = 2
    has the critical point among its preimages; there the other fixed
    point -1 is used."""
    delta = _as_delta(delta)
    if delta == 0:
        return -1.0 + 0j
    return fixed_point(delta).p


def _fixed_point_motion(delta, z0: complex) -> complex | None:
    # a fixed point moves with velocity -1/(2 z0 - 1)
    if abs(z0 * z0 - 2 + delta - z0) <= 1e-13 * (1 + abs(z0)):
        return -1.0 / (2 * z0 - 1)
    return None


def _children(delta, points, log_d, motion):
    arg = points + 2 - delta
    r = csqrt(arg)
    n = len(points)
    pts = np.empty(2 * n, dtype=complex)
    pts[0::2] = r
    pts[1::2] = -r
    with np.errstate(divide="ignore"):
        step = np.log(np.abs(2 * pts))
    ld = np.repeat(log_d, 2) + step
    if motion is None:
        return pts, ld
    with np.errstate(divide="ignore", invalid="ignore"):
        mv = (np.repeat(motion, 2) - 1) / (2 * pts)
    return pts, ld, mv


def expand_level(delta, level: TreeLevel, threads: int = 1) -> TreeLevel:
    """Next depth of the preimage tree."""
    delta = _as_delta(delta)
    hit = np.flatnonzero(level.points + 2 - delta == 0)
    if hit.size and delta != 0:
        raise BranchError("critical value hit", word_string(hit[0], level.depth))
    if level.motion is None:
        pts, ld = chunked_apply(lambda a, b: _children(delta, a, b, None),
                                (level.points, level.log_derivative), threads)
        return TreeLevel(level.depth + 1, pts, ld, None)
    pts, ld, mv = chunked_apply(lambda a, b, c: _children(delta, a, b, c),
                                (level.points, level.log_derivative, level.motion), threads)
    return TreeLevel(level.depth + 1, pts, ld, mv)


def root_level(delta, base=None, motion: bool = False) -> TreeLevel:
    delta = _as_delta(delta)
    z0 = default_base(delta) if base is None else complex(base)
    mv = None
    if motion:
        m0 = _fixed_point_motion(delta, z0)
        if m0 is None:
            from .derivative import phi_dot  # non-fixed base: forward series
            m0 = phi_dot(delta, z0).value
        mv = np.array([m0], dtype=complex)
    return TreeLevel(0, np.array([z0], dtype=complex), np.zeros(1), mv)


def preimage_levels(delta, depth: int, base=None, motion: bool = False,
                    threads: int = 1) -> Iterator[TreeLevel]:
    """Yield the tree levels 0..depth (each level replaces the previous)."""
    level = root_level(delta, base, motion)
    yield level
    for _ in range(depth):
        level = expand_level(delta, level, threads)
        yield level


def tree_level(delta, depth: int, base=None, motion: bool = False,
               threads: int = 1) -> TreeLevel:
    level = None
    for level in preimage_levels(delta, depth, base, motion, threads):
        pass
    return level


# ---------------------------------------------------------------------------
# point sets

@dataclass
class PointSet:
    delta: complex
    depth: int
    points: np.ndarray
    codes: np.ndarray
    mode: str = "full_tree"
    _multiplicity: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.points)

    @property
    def words(self) -> list[str]:
        return [word_string(c, self.depth) for c in self.codes]

    @property
    def multiplicity(self) -> np.ndarray:
        """How many sampled words land on exactly the same point."""
        if self._multiplicity is None:
            key = np.stack([self.points.real + 0.0, self.points.imag + 0.0], axis=1)
            _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
            self._multiplicity = counts[np.ravel(inv)]
        return self._multiplicity

    def collapse(self) -> "PointSet":
        """Distinct points, keeping the first word and the multiplicity."""
        key = np.stack([self.points.real + 0.0, self.points.imag + 0.0], axis=1)
        _, first, counts = np.unique(key, axis=0, return_index=True, return_counts=True)
        order = np.argsort(first, kind="stable")
        idx = first[order]
        return PointSet(self.delta, self.depth, self.points[idx], self.codes[idx],
                        self.mode, counts[order])

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["word", "re", "im", "multiplicity"])
        mult = self.multiplicity
        for c, z, m in zip(self.codes, self.points, mult):
            w.writerow([word_string(c, self.depth), repr(float(z.real)),
                        repr(float(z.imag)), int(m)])


def julia_sample(delta, depth: int, mode: str = "full_tree", seed: int = 0,
                 size: int | None = None, base=None, threads: int = 1) -> PointSet:
    """Preimages of the base point (default p) labelled by their branch words.

    full_tree enumerates all 2^depth words; random_walk draws `size` random
    words from a seeded generator.
    """
    delta = _as_delta(delta)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    z0 = fixed_point(delta).p if base is None else complex(base)
    if mode == "full_tree":
        if depth > MAX_FULL_TREE_DEPTH:
            raise ValueError(f"full_tree depth is capped at {MAX_FULL_TREE_DEPTH}")
        level = tree_level(delta, depth, base=z0, threads=threads)
        codes = np.arange(len(level.points), dtype=np.int64)
        return PointSet(delta, depth, level.points, codes, mode)
    if mode == "random_walk":
        if depth > MAX_WORD_DEPTH:
            raise ValueError(f"random_walk depth is capped at {MAX_WORD_DEPTH}")
        n = size if size is not None else 1 << min(depth, 16)
        rng = np.random.default_rng(seed)
        codes = rng.integers(0, 1 << depth, size=n, dtype=np.int64)
        z = np.full(n, z0, dtype=complex)
        for k in range(depth - 1, -1, -1):
            arg = z + 2 - delta
            bad = np.flatnonzero(arg == 0)
            if bad.size and delta != 0:
                raise BranchError("critical value hit", word_string(codes[bad[0]], depth))
            sgn = np.where((codes >> k) & 1, -1.0, 1.0)
            z = sgn * csqrt(arg)
        return PointSet(delta, depth, z, codes, mode)
    raise ValueError(f"unknown sampling mode {mode!r}")
