import csv
import io
import json
import math
import re

import numpy as np
import pytest
from click.testing import CliRunner

import juliadim.rescaling as rescaling
from juliadim._numerics import content_hash
from juliadim.cli import main


def run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def read_table(path):
    text = path.read_text(encoding="utf-8")
    first, rest = text.split("\n", 1)
    assert first.startswith("# ")
    return json.loads(first[2:]), list(csv.DictReader(io.StringIO(rest))), rest


def test_omega_table_and_plot(tmp_path):
    r = run(["omega", "--out", str(tmp_path)])
    assert r.exit_code == 0, r.output
    meta, rows, body = read_table(tmp_path / "omega.csv")
    assert len(rows) == 500
    vals = [float(x["omega"]) for x in rows]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert meta["content_sha256"] == content_hash(body)
    assert meta["run_config"]["command"] == "omega"
    svg = (tmp_path / "omega.svg").read_text()
    deg = float(re.search(r'class="alpha0" data-degrees="([0-9.]+)"', svg).group(1))
    assert 36 < deg < 38


def test_omega_rejects_empty_grid(tmp_path):
    r = run(["omega", "--grid", "0", "--out", str(tmp_path)])
    assert r.exit_code == 2


def test_alpha0_report(tmp_path):
    assert run(["alpha0", "--out", str(tmp_path)]).exit_code == 0
    rep = json.loads((tmp_path / "alpha0.json").read_text())
    assert 36 < rep["alpha0_deg"] < 38
    assert abs(rep["opening_angle_deg"] - 74) < 2


def test_dim_rows_and_fit(tmp_path):
    r = run(["dim", "--alpha", "pi", "--t", "0.04,0.01,0.0025,0", "--out", str(tmp_path)])
    assert r.exit_code == 0, r.output
    _, rows, _ = read_table(tmp_path / "dim.csv")
    assert list(rows[0]) == ["alpha", "t", "d", "err", "depth", "seconds"]
    zero = [x for x in rows if float(x["t"]) == 0][0]
    assert abs(float(zero["d"]) - 1) < 2e-3
    c = float(re.search(r"fitted c in 1-d = c sqrt\(t\): ([0-9.]+)", r.output).group(1))
    assert 0.30 <= c <= 0.45


@pytest.mark.parametrize("args", [["dim", "--alpha", "foo", "--t", "0.01"],
                                  ["dim", "--alpha", "7", "--t", "0.01"],
                                  ["dim", "--alpha", "pi", "--t", "-1"],
                                  ["dim", "--alpha", "pi"],
                                  ["verify", "--level", "medium"],
                                  ["verify", "--only", "13"]])
def test_usage_errors(tmp_path, args):
    assert run(args + ["--out", str(tmp_path)]).exit_code == 2


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nalpha = pi/2\nt = 0.01\ndepth = 16\nthreads = 2\n")
    assert run(["dim", "--config", str(cfg), "--depth", "14", "--out", str(tmp_path)]).exit_code == 0
    meta, rows, _ = read_table(tmp_path / "dim.csv")
    assert meta["run_config"]["depth"] == 14 and meta["run_config"]["threads"] == 2
    assert float(rows[0]["alpha"]) == pytest.approx(math.pi / 2)
    bad = tmp_path / "bad.cfg"
    bad.write_text("depth 3\n")
    assert run(["dim", "--config", str(bad)]).exit_code == 2


def test_measure_and_rescale_outputs(tmp_path):
    assert run(["measure", "--alpha", "pi", "--t", "0.01", "--depth", "8",
                "--out", str(tmp_path)]).exit_code == 0
    _, rows, _ = read_table(tmp_path / "atoms.csv")
    assert {x["kind"] for x in rows} == {"conformal", "invariant"}
    for kind in ("conformal", "invariant"):
        assert math.fsum(float(x["weight"]) for x in rows if x["kind"] == kind) == pytest.approx(4)
    assert run(["rescale", "--alpha", "pi/2", "--t", "0.01", "--depth", "14",
                "--out", str(tmp_path)]).exit_code == 0
    _, rows, _ = read_table(tmp_path / "rescale.csv")
    assert float(rows[0]["d_H"]) < 0.2
    assert list(tmp_path.glob("rescale_*.svg"))


def test_deriv_command(tmp_path):
    r = run(["deriv", "--alpha", "pi", "--t", "0.01", "--depth", "16", "--method", "fd",
             "--out", str(tmp_path)])
    assert r.exit_code == 0, r.output
    _, rows, _ = read_table(tmp_path / "deriv.csv")
    assert rows[0]["method"] == "finite_difference"
    assert -0.3 < float(rows[0]["scaled"]) < -0.15


def test_verify_catches_sabotaged_hyperbola(tmp_path, monkeypatch):
    monkeypatch.setattr(rescaling, "HYPERBOLA_PRODUCT", 0.25)
    r = run(["verify", "--level", "fast", "--only", "9", "--out", str(tmp_path)])
    assert r.exit_code == 1
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert rep["passed"] is False
