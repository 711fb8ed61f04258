"""Acceptance checks, shared by the `verify` command and the test suite.

Each check returns Check records; `hard` checks decide the exit status,
advisory ones are reported but never fail a run.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import asymptotics as asy
from . import rescaling
from .cylinders import CylinderId, cylinder_points
from .derivative import derivative_fd, derivative_formula, key_integral_check
from .dynamics import (RayParameter, escape_ellipse, fixed_point, inverse_branch,
                       is_admissible, julia_sample, orbit_derivative, apply)
from .measures import (conformal_atoms, conformality_residual, density_at, integrate,
                       invariant_density, ks_distance, lebesgue_cdf)
from .pressure import DepthCapWarning, dimension, fit_sqrt_law, pressure_at

T_SCHEDULE = (0.04, 0.01, 0.0025)


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    value: float
    threshold: str
    hard: bool = True
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else ("FAIL" if self.hard else "FAIL (advisory)")
        return (f"[{tag}] criterion {self.criterion}: {self.name} = {self.value:.10g} "
                f"(need {self.threshold}){' ' + self.detail if self.detail else ''}")


@dataclass(frozen=True)
class Profile:
    name: str
    dim_depth: int
    atom_depth: int
    max_m: int
    measure_depth: int
    rescale_depth: int
    containment_depth: int
    containment_count: int = 20
    seed: int = 20240601
    threads: int = 1


FULL = Profile("full", dim_depth=22, atom_depth=14, max_m=10, measure_depth=18,
               rescale_depth=20, containment_depth=18)
FAST = Profile("fast", dim_depth=20, atom_depth=12, max_m=8, measure_depth=18,
               rescale_depth=18, containment_depth=16)
PROFILES = {"fast": FAST, "full": FULL}


def _timed(fn):
    def wrapper(profile: Profile):
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DepthCapWarning)
            out = fn(profile)
        dt = time.perf_counter() - t0
        for c in out:
            c.seconds = dt / len(out)
        return out
    wrapper.__name__ = fn.__name__
    return wrapper


def _dim(delta, profile, tol=1e-9):
    return dimension(delta, tol, max_depth=profile.dim_depth, threads=profile.threads)


# ---------------------------------------------------------------------------

@_timed
def omega_at_pi(profile):
    ref = -1.0 / (math.sqrt(6.0) * math.pi * math.log(2.0))
    val = asy.omega(math.pi)
    return [
        Check(1, "|omega(pi) + 1/(sqrt6 pi log2)|", abs(val - ref) < 1e-12, abs(val - ref), "< 1e-12"),
        Check(1, "|omega(pi) - (-0.187476)|", abs(val + 0.187476) <= 1e-6, abs(val + 0.187476),
              "<= 1e-6", hard=False,
              detail="printed decimal disagrees with the closed form in its sixth digit"),
    ]


@_timed
def opening_angle(profile):
    a0 = math.degrees(asy.alpha_zero())
    return [Check(2, "alpha_0 in degrees", 36 < a0 < 38, a0, "in (36, 38)"),
            Check(2, "2 alpha_0 in degrees", abs(2 * a0 - 74) <= 2, 2 * a0, "74 +- 2")]


@_timed
def omega_identity(profile):
    grid = np.linspace(math.pi / 100, math.pi, 100)
    worst = max(abs(asy.omega(a) + asy.key_integral(a, kind="limit_R").value
                    / (6 * math.pi * math.log(2))) for a in grid)
    return [Check(3, "max |omega + I_alpha/(6 pi log2)| on 100 angles", worst < 1e-12, worst, "< 1e-12")]


@_timed
def real_ray_constant(profile):
    c = asy.REAL_RAY_COEFFICIENT
    ref = math.sqrt(6.0) / (3 * math.pi * math.log(2.0))
    return [
        Check(4, "|constant - sqrt6/(3 pi log2)|", abs(c - ref) < 1e-12, abs(c - ref), "< 1e-12"),
        Check(4, "|constant - 0.375|", abs(c - 0.375) < 5e-4, abs(c - 0.375), "< 5e-4"),
        Check(4, "constant - 0.362", c > 0.362, c - 0.362, "> 0"),
        Check(4, "|constant - 0.374950|", abs(c - 0.374950) < 1e-6, abs(c - 0.374950), "< 1e-6",
              hard=False, detail="printed decimal disagrees with the closed form in its sixth digit"),
    ]


@_timed
def dimension_sanity(profile):
    est = _dim(0, profile)
    p0 = [pressure_at(0, 0.0, n) for n in (1, 5, 10, 15, 20)]
    worst = max(abs(p - math.log(2)) for p in p0)
    return [Check(5, "|d(0) - 1|", abs(est.d_value - 1) <= 2e-3 and est.depth_used <= 22,
                  abs(est.d_value - 1), "<= 2e-3 at depth <= 22"),
            Check(5, "max |P_n(0) - log 2|", worst == 0.0, worst, "== 0")]


@_timed
def real_ray_law(profile):
    ds = [_dim(RayParameter(math.pi, t).delta, profile).d_value for t in T_SCHEDULE]
    c = fit_sqrt_law(T_SCHEDULE, ds)
    return [Check(6, "fitted c in 1 - d = c sqrt(t)", 0.30 <= c <= 0.45, c, "in [0.30, 0.45]")]


@_timed
def headline_limit(profile):
    out = []
    for alpha in (math.pi / 2, 3 * math.pi / 4, math.pi):
        ray = RayParameter(alpha, 0.0025)
        F = derivative_formula(ray, depth=profile.dim_depth, atom_depth=profile.atom_depth,
                               max_m=profile.max_m, threads=profile.threads)
        D = derivative_fd(ray, depth=profile.dim_depth)
        om = asy.omega(alpha)
        for est in (F, D):
            rel = abs(est.scaled / om - 1)
            out.append(Check(7, f"|sqrt(t) d'/Omega - 1| ({est.method}, alpha={alpha:.4f})",
                             rel <= 0.30, rel, "<= 0.30"))
        gap = abs(F.value - D.value)
        bar = F.err + D.err
        out.append(Check(7, f"|formula - fd| / combined error bar (alpha={alpha:.4f})",
                         gap <= bar, gap / bar, "<= 1"))
    return out


@_timed
def key_integral_limit(profile):
    out = []
    for alpha in (math.pi, math.pi / 2):
        gaps = [key_integral_check(RayParameter(alpha, t), 2.0, depth=profile.dim_depth,
                                   atom_depth=profile.atom_depth,
                                   max_m=min(profile.max_m, 8)).gap for t in T_SCHEDULE]
        dec = all(b < a for a, b in zip(gaps, gaps[1:]))
        out.append(Check(8, f"key-integral gaps decreasing (alpha={alpha:.4f})", dec,
                         float(dec), "== 1", detail=str([round(g, 4) for g in gaps])))
        out.append(Check(8, f"final key-integral gap (alpha={alpha:.4f})", gaps[-1] < 0.2,
                         gaps[-1], "< 0.2"))
    return out


@_timed
def rescaled_geometry(profile):
    out = []
    for alpha in (math.pi / 2, math.pi):
        rep = rescaling.convergence_study(alpha, 2.0, T_SCHEDULE, profile.rescale_depth,
                                          threads=profile.threads)
        vals = [r.d_H for r in rep]
        dec = all(b < a for a, b in zip(vals, vals[1:]))
        out.append(Check(9, f"d_H decreasing (alpha={alpha:.4f})", dec, float(dec), "== 1",
                         detail=str([round(v, 5) for v in vals])))
        out.append(Check(9, f"final d_H (alpha={alpha:.4f})", vals[-1] < 0.1, vals[-1], "< 0.1"))
    # the arc endpoints against the closed form sqrt6/3 (sin(a/2) - i cos(a/2))
    a = math.pi / 2
    b, _, _ = rescaling.hyperbola_endpoints(a, 2.0)
    ref = math.sqrt(6) / 3 * complex(math.sin(a / 2), -math.cos(a / 2))
    out.append(Check(9, "|b* - closed form|", abs(b - ref) < 1e-12, abs(b - ref), "< 1e-12"))
    return out


@_timed
def measure_limits(profile):
    n = profile.measure_depth
    om = conformal_atoms(0, 1.0, n, threads=profile.threads)
    ks = ks_distance(om.points.real, om.weights, lebesgue_cdf)
    coarse = conformal_atoms(0, 1.0, 12)
    mu = invariant_density(0, 1.0, coarse, max_m=profile.max_m + 2)
    h0 = density_at(0, 1.0, 0.0, coarse, m=10)
    lyap = integrate(mu, lambda z: np.log(np.abs(2 * z)))
    out = [Check(10, "KS(omega_0, Lebesgue)", ks < 0.02, ks, "< 0.02"),
           Check(10, "|h(0) / (2/pi) - 1|", abs(h0 * math.pi / 2 - 1) < 0.02,
                 abs(h0 * math.pi / 2 - 1), "< 0.02"),
           Check(10, "|int log|f'| d mu_0 / (4 log2) - 1|", abs(lyap / (4 * math.log(2)) - 1) < 0.03,
                 abs(lyap / (4 * math.log(2)) - 1), "< 0.03")]
    d = _dim(-0.01, profile).d_value
    for delta, dd in ((0, 1.0), (-0.01, d)):
        at = om if delta == 0 else conformal_atoms(delta, dd, n, threads=profile.threads)
        worst = max(conformality_residual(at, k) for k in range(1, 9))
        out.append(Check(10, f"max conformality residual (delta={delta}, cylinders 1..8)",
                         worst < 0.05, worst, "< 0.05"))
    return out


def random_admissible(count: int, seed: int):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        t = float(10 ** rng.uniform(-3, -1))
        a = float(rng.uniform(math.pi / 4, 7 * math.pi / 4))
        delta = RayParameter(a, t).delta
        if is_admissible(delta):
            out.append(delta)
    return out


@_timed
def invariant_suites(profile):
    rng = np.random.default_rng(profile.seed)
    out = []
    # branch round trips
    worst = 0.0
    for delta in random_admissible(5, profile.seed + 1):
        z = julia_sample(delta, 10).points
        w = rng.normal(size=64) + 1j * rng.normal(size=64)
        for s in ("+", "-"):
            zz = inverse_branch(delta, w, s)
            worst = max(worst, float(np.max(np.abs(apply(delta, zz, 1) - w) / np.abs(w))))
        back = np.where(z.real > 0, inverse_branch(delta, apply(delta, z, 1), "+"),
                        inverse_branch(delta, apply(delta, z, 1), "-"))
        worst = max(worst, float(np.max(np.abs(back - z) / np.maximum(np.abs(z), 1e-300))))
    out.append(Check(11, "branch round-trip relative error", worst < 1e-12, worst, "< 1e-12"))
    # Chebyshev derivative law at delta = 0
    # orbits passing within 1e-4 of the degenerate value 4 - x^2 = 0 are skipped:
    # there the closed form, not the product, loses accuracy
    x = rng.uniform(-1.999, 1.999, 200)
    worst = 0.0
    margin = 4 - x ** 2
    for n in range(1, 21):
        lhs = np.abs(orbit_derivative(0, x.astype(complex), n))
        fx = apply(0, x.astype(complex), n).real
        margin = np.minimum(margin, 4 - fx ** 2)
        ok = margin > 1e-4
        rhs = 2.0 ** n * np.sqrt((4 - fx ** 2) / (4 - x ** 2))
        worst = max(worst, float(np.max(np.abs(lhs[ok] / rhs[ok] - 1), initial=0.0)))
    out.append(Check(11, "Chebyshev derivative law relative error", worst < 1e-10, worst, "< 1e-10"))
    # ellipse containment
    bad = 0
    for delta in random_admissible(profile.containment_count, profile.seed + 2):
        z = julia_sample(delta, profile.containment_depth, threads=profile.threads).points
        bad += int(np.sum(~escape_ellipse(delta).contains(z)))
    out.append(Check(11, f"ellipse containment violations ({profile.containment_count} parameters)",
                     bad == 0, bad, "== 0"))
    # zero-cylinder diameter slope, above the sqrt|delta| scale
    worst = 0.0
    for delta in (0.0, 1e-10j, -1e-10, 1e-10 * complex(math.cos(2.5), math.sin(2.5))):
        lam = abs(fixed_point(delta).lam)
        ns = np.arange(4, 13)
        diam = [cylinder_points(delta, CylinderId("zero_plus", int(k))).diam_estimate for k in ns]
        slope = np.polyfit(ns, np.log(diam), 1)[0]
        worst = max(worst, abs(slope / (-0.5 * math.log(lam)) - 1))
    out.append(Check(11, "zero-cylinder diameter slope relative error", worst < 0.10, worst, "< 0.10"))
    # thin bands near +-p
    bad = 0
    for delta in (-0.01, 0.02 * RayParameter(3 * math.pi / 4, 1.0).direction):
        bad += rescaling.band_check(delta, 18, threads=profile.threads).violations
    out.append(Check(11, "band violations", bad == 0, bad, "== 0"))
    return out


@_timed
def thread_invariance(profile):
    a = dimension(-0.01, 1e-9, max_depth=18, threads=1)
    b = dimension(-0.01, 1e-9, max_depth=18, threads=3)
    same = a.d_value == b.d_value and a.roots == b.roots
    return [Check(12, "dimension bit-identical for 1 and 3 threads", same, float(same), "== 1")]


SUITE = {
    1: omega_at_pi, 2: opening_angle, 3: omega_identity, 4: real_ray_constant,
    5: dimension_sanity, 6: real_ray_law, 7: headline_limit, 8: key_integral_limit,
    9: rescaled_geometry, 10: measure_limits, 11: invariant_suites, 12: thread_invariance,
}


def run_suite(profile: Profile, criteria=None, log=None) -> list[Check]:
    checks = []
    for k, fn in SUITE.items():
        if criteria is not None and k not in criteria:
            continue
        res = fn(profile)
        for c in res:
            if log:
                log(c.line())
        checks.extend(res)
    return checks


def passed(checks) -> bool:
    return all(c.passed for c in checks if c.hard)


def as_rows(checks):
    return [asdict(c) for c in checks]
