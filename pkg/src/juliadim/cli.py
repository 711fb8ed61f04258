"""Command line: omega, alpha0, dim, deriv, rescale, measure, verify.

Every table starts with one '#' line holding the run configuration and a
SHA-256 of the deterministic columns, followed by a one-line CSV header.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__
from ._numerics import content_hash

VOLATILE_COLUMNS = ("seconds",)


@dataclass
class RunConfig:
    command: str
    alphas: list = field(default_factory=list)
    ts: list = field(default_factory=list)
    depth: int | None = None
    tol: float | None = None
    out: str = "out"
    seed: int = 0
    threads: int = 1
    options: dict = field(default_factory=dict)

    def validate(self):
        for a in self.alphas:
            if not (0 < a < 2 * math.pi):
                raise click.UsageError(f"angle {a} outside (0, 2pi)")
        for t in self.ts:
            if not (t >= 0 and math.isfinite(t)):
                raise click.UsageError(f"ray magnitude {t} must be a finite number >= 0")
        if self.threads < 1:
            raise click.UsageError("--threads must be >= 1")
        if self.depth is not None and self.depth < 1:
            raise click.UsageError("--depth must be >= 1")
        if self.tol is not None and not self.tol > 0:
            raise click.UsageError("--tol must be positive")
        return self

    def as_dict(self) -> dict:
        d = asdict(self)
        d["version"] = __version__
        return d


# ---------------------------------------------------------------------------
# parsing helpers

def parse_config_file(path) -> dict:
    """key=value lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def parse_angles(text: str) -> list[float]:
    """Comma list of angles; 'pi', 'pi/2', '3pi/4' and degrees like '90deg'."""
    vals = []
    for tok in filter(None, (s.strip() for s in str(text).split(","))):
        try:
            if tok.endswith("deg"):
                vals.append(math.radians(float(tok[:-3])))
            elif "pi" in tok:
                num, _, den = tok.partition("/")
                coef = num.replace("pi", "").replace("*", "").strip()
                v = (float(coef) if coef else 1.0) * math.pi
                vals.append(v / float(den) if den else v)
            else:
                vals.append(float(tok))
        except ValueError:
            raise click.BadParameter(f"cannot read angle {tok!r}")
    return vals


def parse_floats(text: str) -> list[float]:
    try:
        return [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"cannot read number list {text!r}")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_table(cfg: RunConfig, columns, rows) -> str:
    body = io.StringIO()
    w = csv.writer(body, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    stable_cols = [c for c in columns if c not in VOLATILE_COLUMNS]
    stable = io.StringIO()
    w2 = csv.writer(stable, lineterminator="\n")
    w2.writerow(stable_cols)
    for r in rows:
        w2.writerow([_fmt(r[c]) for c in stable_cols])
    meta = {"run_config": cfg.as_dict(), "content_sha256": content_hash(stable.getvalue())}
    return "# " + json.dumps(meta, sort_keys=True) + "\n" + body.getvalue()


def write_table(cfg: RunConfig, name: str, columns, rows) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(render_table(cfg, columns, rows), encoding="utf-8")
    return path


def write_json(cfg: RunConfig, name: str, payload: dict, volatile=()) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stable = {k: v for k, v in payload.items() if k not in volatile}
    doc = {"run_config": cfg.as_dict(), "content_sha256": content_hash(stable), **payload}
    path = out / name
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n",
                    encoding="utf-8")
    return path


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def write_svg(cfg: RunConfig, name: str, svg: str) -> Path:
    meta = json.dumps({"run_config": cfg.as_dict()}, sort_keys=True).replace("--", "- -")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    head, rest = svg.split("\n", 1)
    path.write_text(f"{head}\n<!-- {meta} sha256={content_hash(rest)} -->\n{rest}\n",
                    encoding="utf-8")
    return path


def omega_svg(alphas, values, a0: float, size=(640, 400)) -> str:
    W, H = size
    pad = 40
    lo, hi = float(min(values)), float(max(values))
    span = hi - lo or 1.0
    sx = lambda a: pad + a / math.pi * (W - 2 * pad)
    sy = lambda v: H - pad - (v - lo) / span * (H - 2 * pad)
    pts = " ".join(f"{sx(a):.2f},{sy(v):.2f}" for a, v in zip(alphas, values))
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             '<rect width="100%" height="100%" fill="white"/>',
             f'<line x1="{pad}" y1="{sy(0):.2f}" x2="{W - pad}" y2="{sy(0):.2f}" stroke="#888"/>',
             f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>']
    parts.append(f'<circle class="alpha0" data-degrees="{math.degrees(a0):.6f}" '
                 f'cx="{sx(a0):.2f}" cy="{sy(0):.2f}" r="4" fill="#d62728"/>')
    parts.append(f'<text x="{sx(a0) + 6:.2f}" y="{sy(0) - 8:.2f}" font-size="12">'
                 f'alpha0 = {math.degrees(a0):.3f} deg</text>')
    parts.append("</svg>")
    return "\n".join(parts)


# ---------------------------------------------------------------------------

def common_options(fn):
    opts = [
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                     help="key=value file; flags override it"),
        click.option("--out", default=None, help="output directory"),
        click.option("--threads", type=int, default=None, help="worker threads"),
        click.option("--seed", type=int, default=None, help="random seed"),
        click.option("--tol", type=float, default=None, help="tolerance"),
        click.option("--depth", type=int, default=None, help="tree depth"),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


def build_config(command: str, config_file, flags: dict, list_keys=()) -> RunConfig:
    merged = parse_config_file(config_file) if config_file else {}
    merged.update({k: v for k, v in flags.items() if v is not None})
    cfg = RunConfig(command)
    cfg.out = str(merged.pop("out", "out"))
    try:
        cfg.threads = int(merged.pop("threads", 1))
        cfg.seed = int(merged.pop("seed", 0))
        if "depth" in merged:
            cfg.depth = int(merged.pop("depth"))
        if "tol" in merged:
            cfg.tol = float(merged.pop("tol"))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if "alpha" in merged:
        cfg.alphas = parse_angles(merged.pop("alpha"))
    if "t" in merged:
        cfg.ts = parse_floats(merged.pop("t"))
    cfg.options = {k: v for k, v in merged.items()}
    return cfg.validate()


@click.group()
@click.version_option(__version__)
def main():
    """Dimension of Julia sets of z^2 - 2 + delta near delta = 0."""


@main.command("omega")
@common_options
@click.option("--grid", type=int, default=None, help="number of angles in (0, pi]")
def cmd_omega(config_file, out, threads, seed, tol, depth, grid):
    """Tabulate Omega(alpha) on (0, pi] and plot it (Omega is symmetric about pi)."""
    from .asymptotics import alpha_zero, omega
    cfg = build_config("omega", config_file, dict(out=out, threads=threads, seed=seed, tol=tol,
                                                  depth=depth, grid=grid))
    n = int(cfg.options.get("grid", 500))
    if n < 1:
        raise click.UsageError("--grid must be a positive number of angles")
    alphas = np.arange(1, n + 1) * (math.pi / n)
    vals = [omega(a) for a in alphas]
    a0 = alpha_zero()
    p = write_table(cfg, "omega.csv", ["alpha", "omega"],
                    [{"alpha": a, "omega": v} for a, v in zip(alphas, vals)])
    write_svg(cfg, "omega.svg", omega_svg(alphas, vals, a0))
    click.echo(f"wrote {p} and omega.svg; alpha0 = {math.degrees(a0):.6f} deg")


@main.command("alpha0")
@common_options
def cmd_alpha0(config_file, out, threads, seed, tol, depth):
    """Zero of Omega and the real-ray constant."""
    from .asymptotics import OMEGA_SCALE, REAL_RAY_COEFFICIENT, alpha_zero, omega
    cfg = build_config("alpha0", config_file, dict(out=out, threads=threads, seed=seed,
                                                   tol=tol, depth=depth))
    a0 = alpha_zero(cfg.tol or 1e-12)
    payload = {"alpha0_rad": a0, "alpha0_deg": math.degrees(a0), "opening_angle_deg": 2 * math.degrees(a0),
               "omega_at_alpha0": omega(a0), "omega_limit_at_zero": OMEGA_SCALE,
               "omega_at_pi": omega(math.pi), "real_ray_coefficient": REAL_RAY_COEFFICIENT}
    p = write_json(cfg, "alpha0.json", payload)
    click.echo(f"alpha0 = {a0:.12f} rad = {math.degrees(a0):.6f} deg ({p})")


@main.command("dim")
@common_options
@click.option("--alpha", default=None, help="comma list of angles (e.g. pi,pi/2)")
@click.option("--t", "t", default=None, help="comma list of magnitudes")
def cmd_dim(config_file, out, threads, seed, tol, depth, alpha, t):
    """Dimension along rays."""
    from .dynamics import RayParameter
    from .pressure import dimension_scan, fit_sqrt_law
    cfg = build_config("dim", config_file, dict(out=out, threads=threads, seed=seed, tol=tol,
                                                depth=depth, alpha=alpha, t=t))
    if not cfg.alphas or not cfg.ts:
        raise click.UsageError("dim needs --alpha and --t")
    rays = [RayParameter(a, x) for a in cfg.alphas for x in cfg.ts]
    rows = dimension_scan(rays, cfg.tol or 1e-7, max_depth=cfg.depth or 22, threads=cfg.threads)
    cols = ["alpha", "t", "d", "err", "depth", "seconds"]
    p = write_table(cfg, "dim.csv", cols, [{c: getattr(r, c) for c in cols} for r in rows])
    for r in rows:
        click.echo(f"alpha={r.alpha:.6f} t={r.t:g} d={r.d:.10f} err={r.err:.2e}"
                   + (f" ERROR {r.error}" if r.error else ""))
    for a in cfg.alphas:
        sel = [r for r in rows if r.alpha == a and r.t > 0 and not r.error]
        if len(sel) >= 2:
            click.echo(f"alpha={a:.6f}: fitted c in 1-d = c sqrt(t): "
                       f"{fit_sqrt_law([r.t for r in sel], [r.d for r in sel]):.4f}")
    click.echo(f"wrote {p}")


@main.command("deriv")
@common_options
@click.option("--alpha", default=None)
@click.option("--t", "t", default=None)
@click.option("--method", type=click.Choice(["formula", "fd", "both"]), default=None)
def cmd_deriv(config_file, out, threads, seed, tol, depth, alpha, t, method):
    """Directional derivative of the dimension, scaled by sqrt(t)."""
    from .derivative import derivative_fd, derivative_formula
    from .dynamics import RayParameter
    cfg = build_config("deriv", config_file, dict(out=out, threads=threads, seed=seed, tol=tol,
                                                  depth=depth, alpha=alpha, t=t, method=method))
    if not cfg.alphas or not cfg.ts or any(x <= 0 for x in cfg.ts):
        raise click.UsageError("deriv needs --alpha and positive --t values")
    how = cfg.options.get("method", "both")
    rows = []
    for a in cfg.alphas:
        for x in cfg.ts:
            ray = RayParameter(a, x)
            if how in ("formula", "both"):
                rows.append(derivative_formula(ray, depth=cfg.depth or 22, threads=cfg.threads))
            if how in ("fd", "both"):
                rows.append(derivative_fd(ray, tol=cfg.tol or 1e-6, depth=cfg.depth or 22))
    cols = ["alpha", "t", "method", "dprime", "scaled", "err", "num", "den", "excluded_mass"]
    p = write_table(cfg, "deriv.csv", cols, [e.row() for e in rows])
    for e in rows:
        click.echo(f"alpha={e.ray.alpha:.6f} t={e.ray.t:g} {e.method}: sqrt(t) d' = {e.scaled:.6f}"
                   f" +- {e.scaled_err:.1e}")
    click.echo(f"wrote {p}")


@main.command("rescale")
@common_options
@click.option("--alpha", default=None)
@click.option("--t", "t", default=None)
@click.option("--R", "R", type=float, default=None)
@click.option("--svg/--no-svg", default=True)
def cmd_rescale(config_file, out, threads, seed, tol, depth, alpha, t, R, svg):
    """Hausdorff distance from the rescaled window to the hyperbola arc."""
    from .dynamics import RayParameter
    from .rescaling import hausdorff_distance, hyperbola_sample, rescaled_window, svg_overlay
    cfg = build_config("rescale", config_file, dict(out=out, threads=threads, seed=seed, tol=tol,
                                                    depth=depth, alpha=alpha, t=t, R=R))
    Rv = float(cfg.options.get("R", 2.0))
    alphas = cfg.alphas or [math.pi]
    ts = cfg.ts or [0.04, 0.01, 0.0025]
    if any(x <= 0 for x in ts) or Rv < 1:
        raise click.UsageError("rescale needs t > 0 and R >= 1")
    dep = cfg.depth or 20
    rows = []
    for a in alphas:
        arc = hyperbola_sample(a, Rv)
        for x in ts:
            pts = rescaled_window(RayParameter(a, x).delta, Rv, dep, threads=cfg.threads)
            rows.append({"alpha": a, "t": x, "R": Rv, "d_H": hausdorff_distance(pts, arc),
                         "window_points": len(pts), "depth": dep})
            if svg:
                write_svg(cfg, f"rescale_a{a:.4f}_t{x:g}.svg",
                          svg_overlay(pts, arc, f"alpha={a:.4f} t={x:g} R={Rv:g}"))
    p = write_table(cfg, "rescale.csv", ["alpha", "t", "R", "d_H", "window_points", "depth"], rows)
    for r in rows:
        click.echo(f"alpha={r['alpha']:.6f} t={r['t']:g} d_H={r['d_H']:.5f} ({r['window_points']} points)")
    click.echo(f"wrote {p}")


@main.command("measure")
@common_options
@click.option("--alpha", default=None)
@click.option("--t", "t", default=None)
def cmd_measure(config_file, out, threads, seed, tol, depth, alpha, t):
    """Dump conformal and invariant atoms for one parameter."""
    from .dynamics import RayParameter
    from .measures import conformal_atoms, invariant_density
    from .pressure import dimension
    cfg = build_config("measure", config_file, dict(out=out, threads=threads, seed=seed, tol=tol,
                                                    depth=depth, alpha=alpha, t=t))
    a = cfg.alphas[0] if cfg.alphas else math.pi
    x = cfg.ts[0] if cfg.ts else 0.0
    delta = RayParameter(a, x).delta
    dep = cfg.depth or 12
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = dimension(delta, cfg.tol or 1e-9).d_value
        om = conformal_atoms(delta, d, dep, threads=cfg.threads)
        mu = invariant_density(delta, d, om, threads=cfg.threads)
    rows = []
    for at in (om, mu):
        for z, w in zip(at.points, at.weights):
            rows.append({"re": z.real, "im": z.imag, "weight": w, "kind": at.kind})
    p = write_table(cfg, "atoms.csv", ["re", "im", "weight", "kind"], rows)
    write_json(cfg, "atoms_summary.json", {"conformal": om.summary(), "invariant": mu.summary()})
    click.echo(f"d = {d:.10f}; {len(om)} atoms of each kind; wrote {p}")


@main.command("verify")
@common_options
@click.option("--level", default=None, help="fast or full")
@click.option("--only", default=None, help="comma list of criterion numbers")
def cmd_verify(config_file, out, threads, seed, tol, depth, level, only):
    """Run the acceptance suite; exit status 1 on any hard failure."""
    from dataclasses import replace
    from .verify import PROFILES, SUITE, as_rows, passed, run_suite
    cfg = build_config("verify", config_file, dict(out=out, threads=threads, seed=seed, tol=tol,
                                                   depth=depth, level=level, only=only))
    lvl = cfg.options.get("level", "fast")
    if lvl not in PROFILES:
        raise click.UsageError(f"unknown level {lvl!r} (use fast or full)")
    profile = replace(PROFILES[lvl], threads=cfg.threads)
    criteria = None
    if "only" in cfg.options:
        try:
            criteria = [int(c) for c in str(cfg.options["only"]).split(",") if c.strip()]
        except ValueError:
            raise click.UsageError("--only expects criterion numbers")
        if not criteria or any(c not in SUITE for c in criteria):
            raise click.UsageError(f"--only must name criteria among {sorted(SUITE)}")
    t0 = time.perf_counter()
    checks = run_suite(profile, criteria, log=click.echo)
    ok = passed(checks)
    cols = ["criterion", "name", "passed", "hard", "value", "threshold"]
    write_table(cfg, "verify_results.csv", cols, [{c: getattr(k, c) for c in cols} for k in checks])
    write_json(cfg, "verify_report.json",
               {"level": lvl, "passed": ok, "checks": as_rows(checks),
                "seconds": time.perf_counter() - t0},
               volatile=("seconds", "checks"))
    click.echo(("PASS" if ok else "FAIL") + f" ({sum(c.passed for c in checks)}/{len(checks)} checks)")
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
