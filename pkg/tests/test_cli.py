from __future__ import annotations

import csv
import io
import json
import logging
import math
import subprocess
import sys

import numpy as np
import pytest

from grushin import cli, synthesis, verify
from grushin.gentrig import pi_alpha


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    meta = {}
    for ln in text.splitlines():
        if ln.startswith("# "):
            key, value = ln[2:].split(": ", 1)
            meta[key] = json.loads(value)
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    return meta, rows[0], np.array([[float(v) for v in r] for r in rows[1:]]) if rows[1:] else None


def test_trig_default(capsys):
    code, out, _ = run(capsys, "trig", "--samples", "4001")
    assert code == 0
    meta, cols, data = parse_csv(out)
    assert meta["schema_version"] == cli.SCHEMA_VERSION
    assert meta["a"] == 16.0 and meta["b"] == 2.0
    sin = data[:, cols.index("sin")]
    assert np.max(np.abs(sin)) <= 1.0 and np.max(np.abs(sin)) > 1 - 1e-4
    assert np.max(data[:, cols.index("pythagorean_residual")]) <= 1e-10
    assert np.all(data[:, cols.index("period")] == 2 * pi_alpha(8))


def test_trig_general_params_json(capsys):
    code, out, _ = run(capsys, "trig", "--a", "3", "--b", "1.5", "--samples", "5", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["schema_version"] == cli.SCHEMA_VERSION
    assert "eta" not in doc["columns"] and len(doc["rows"]) == 5


def test_geodesic_table(capsys):
    code, out, _ = run(capsys, "geodesic", "--alpha", "1,2", "--base", "1.1,0.7,0.2",
                       "--phi", "1.2,2.5", "--samples", "50")
    assert code == 0
    meta, cols, data = parse_csv(out)
    H = data[:, cols.index("H")]
    assert np.allclose(H, 0.5, atol=1e-12)
    first = data[0]
    assert list(first[[cols.index(f"x{j}") for j in range(3)]]) == [1.1, 0.7, 0.2]
    marked = data[data[:, cols.index("tau_marker")] == 1]
    assert len(marked) == 1 and marked[0, 0] == meta["tau"]
    for j in meta["argmin"]:
        assert marked[0, cols.index(f"x{j}")] == pytest.approx(-[1.1, 0.7, 0.2][j], abs=1e-9)


def test_covector_normalization_warning(capsys, caplog):
    with caplog.at_level(logging.WARNING, logger="grushin"):
        code, out, _ = run(capsys, "conjugate", "--alpha", "1,1", "--base", "1,1,0",
                           "--covector", "0.3,0.4,0.5", "--format", "json")
    assert code == 0 and "rescaled" in caplog.text
    doc = json.loads(out)
    p0 = np.array(doc["meta"]["p0"])
    assert 0.5 * (p0[0] ** 2 + p0[1] ** 2 + p0[2] ** 2) == pytest.approx(0.5)


def test_conjugate_quarter(capsys):
    code, out, _ = run(capsys, "conjugate", "--alpha", "1,2", "--base", "1,0.7,0",
                       "--phi", f"{math.pi / 2!r},0.4", "--format", "json")
    doc = json.loads(out)["meta"]
    assert code == 0 and doc["conjugate_at_tau"] == 1 and doc["t_con"] == doc["tau"]


def test_sphere(capsys):
    code, out, _ = run(capsys, "sphere", "--alpha", "1,1", "--base", "1,1,0", "--t", "1",
                       "--samples", "5")
    _, cols, data = parse_csv(out)
    assert code == 0 and data.shape == (25, len(cols))
    code, out, _ = run(capsys, "sphere", "--alpha", "1,1,1", "--base", "1,1,1,0", "--t", "1",
                       "--samples", "7", "--seed", "3")
    _, _, first = parse_csv(out)
    _, _, second = parse_csv(run(capsys, "sphere", "--alpha", "1,1,1", "--base", "1,1,1,0",
                                     "--t", "1", "--samples", "7", "--seed", "3")[1])
    assert np.array_equal(first, second)


def test_cut_locus_type2_full(capsys):
    code, out, _ = run(capsys, "cut-locus", "--alpha", "1,1", "--base", "2.4,1,0",
                       "--samples", "200", "--variant", "full", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["meta"]["type"] == "Type2Strict"
    E = [p for p in doc["polylines"] if p["label"] == "E_curve"]
    assert [p["simple"] for p in E] == [1, 0]
    rows = [r for r in doc["rows"] if r[1] == "Lambda2"]
    off = synthesis.cut_y_offset((1, 1), 1.0)
    assert all(abs(abs(r[5]) - off) <= 1e-10 for r in rows)


def test_cut_locus_singular(capsys):
    code, out, _ = run(capsys, "cut-locus", "--alpha", "1,1", "--base", "0,0,0.5", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["polylines"] == [] and doc["rows"] == []
    assert [s["kind"] for s in doc["surfaces"]] == ["plane", "plane"]
    code, out, _ = run(capsys, "cut-locus", "--alpha", "1,2", "--base", "0,0.8,0.5",
                       "--samples", "40")
    _, cols, data = parse_csv(out.replace(",CutY,", ",0,"))
    dz = np.abs(data[:, cols.index("z")] - 0.5)
    assert np.allclose(dz, synthesis.cut_y_offset((1, 2), 0.8))


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", "--alpha", "1,1", "--base", "2.4,1,0")
    assert code == 0 and "Type2Strict" in out
    code, out, _ = run(capsys, "classify", "--alpha", "2,2", "--base", "1,1,0")
    assert "Type1Strict" in out
    code, out, _ = run(capsys, "classify", "--alpha", "2,2", "--base", "0,1,0")
    assert "singular:x0_zero" in out


@pytest.mark.parametrize("argv", [
    ["geodesic", "--alpha", "1,1", "--base", "1,1"],
    ["geodesic", "--alpha", "1,1", "--base", "1,1,0"],
    ["geodesic", "--alpha", "1,1", "--base", "0,1,0", "--phi", "1,1"],
    ["geodesic", "--alpha", "1,1", "--base", "1,1,0", "--covector", "0,0,0"],
    ["sphere", "--alpha", "1,1"],
    ["trig", "--alpha", "1,2"],
    ["trig", "--a", "2", "--b", "1"],
    ["cut-locus", "--alpha", "1"],
    ["verify", "--criteria", "12"],
])
def test_invalid_input_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and "error" in err


def test_config_file_and_out(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"alpha": [1, 1], "base": [1, 1, 0], "phi": [1.0, 2.0], "samples": 7}))
    dest = tmp_path / "out.csv"
    code, out, _ = run(capsys, "geodesic", "--config", str(cfg), "--samples", "9", "--out", str(dest))
    assert code == 0 and out == ""
    _, _, data = parse_csv(dest.read_text())
    assert len(data) == 9  # default t_max is tau, already the last grid point
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": 1}))
    assert run(capsys, "geodesic", "--config", str(bad))[0] == 1


def test_verify_subset_reproducible(capsys):
    code, out, _ = run(capsys, "verify", "--criteria", "1,9", "--format", "json")
    assert code == 0
    first = json.loads(out)
    again = json.loads(run(capsys, "verify", "--criteria", "1,9", "--format", "json")[1])
    metrics = lambda doc: [(r[0], r[2], r[5]) for r in doc["rows"]]
    assert metrics(first) == metrics(again)
    assert all(r[2] == 1 for r in first["rows"])


def test_verify_failure_exit_two(capsys, monkeypatch):
    monkeypatch.setitem(verify.CRITERIA, 1, ("always fails", lambda seed=0: {"passed": False}, 10.0))
    code, _, _ = run(capsys, "verify", "--criteria", "1")
    assert code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "grushin", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("grushin")
