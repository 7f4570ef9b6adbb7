import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qmot import io
from qmot.cli import main
from qmot.errors import DimensionError, HermitianError, ParseError
from qmot.hermitian import random_pd
from qmot.lindblad import basis_hermitian


def put(path, a):
    io.write_matrix(a, path)
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), (json.loads(err) if err else None)


@pytest.fixture
def files(tmp_path, rng):
    a = random_pd(rng, 2)
    b = random_pd(rng, 2)
    return {
        "a": put(tmp_path / "a.json", a),
        "b": put(tmp_path / "b.json", b),
        "one": put(tmp_path / "one.json", np.array([[1.0]])),
        "four": put(tmp_path / "four.json", np.array([[4.0]])),
        "dir": tmp_path,
    }


# -- encodings ----------------------------------------------------------------

def test_matrix_roundtrip(tmp_path, rng):
    a = random_pd(rng, 3)
    io.write_matrix(a, tmp_path / "m.json")
    b = io.read_matrix(tmp_path / "m.json")
    assert np.allclose(a, b, rtol=1e-11)
    obj = json.loads((tmp_path / "m.json").read_text())
    assert list(obj) == ["n", "re", "im"] and obj["n"] == 3


def test_matrix_errors(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ParseError):
        io.read_matrix(tmp_path / "bad.json")
    with pytest.raises(ParseError):
        io.read_matrix(tmp_path / "missing.json")
    with pytest.raises(ParseError):
        io.matrix_from_json({"n": 2, "re": [[1, 2]]})
    with pytest.raises(ParseError):
        io.matrix_from_json({"n": 1, "re": [["x"]]})
    with pytest.raises(DimensionError):
        io.matrix_from_json({"n": 3, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]})
    with pytest.raises(HermitianError):
        io.matrix_from_json({"n": 2, "re": [[1, 1], [0, 1]], "im": [[0, 0], [0, 0]]})
    # tiny asymmetry is accepted and removed
    m = io.matrix_from_json({"n": 2, "re": [[1, 1e-12], [0, 1]], "im": [[0, 0], [0, 0]]})
    assert m[0, 1] == m[1, 0]


def test_basis_and_field_roundtrip(tmp_path, rng):
    B = basis_hermitian(2, full=True)
    io.write_json(io.basis_to_json(B), tmp_path / "b.json")
    assert np.allclose(io.read_basis(tmp_path / "b.json").matrices, B.matrices)
    from qmot.field import MatrixField
    f = MatrixField(np.array([random_pd(rng, 2) for _ in range(3)]), 0.25)
    io.write_json(io.field_to_json(f), tmp_path / "f.json")
    g = io.read_field(tmp_path / "f.json")
    assert g.h == 0.25 and np.allclose(g.cells, f.cells, rtol=1e-11)
    with pytest.raises(DimensionError):
        io.field_from_json({"n": 2, "M": 4, "h": 1, "cells": io.field_to_json(f)["cells"]})


def test_float_format():
    assert io.fmt_float(1 / 3) == 0.333333333333
    assert io.dumps({"x": np.float64(2.0) / 3, "b": np.bool_(True)}) == \
        '{\n  "x": 0.666666666667,\n  "b": true\n}\n'


def test_path_csv(tmp_path, rng):
    states = np.array([random_pd(rng, 2) for _ in range(3)])
    io.write_path_csv(tmp_path / "p.csv", [0, 0.5, 1], states)
    rows = list(csv.reader(open(tmp_path / "p.csv")))
    assert rows[0] == ["time", "cell", "re_00", "re_01", "re_10", "re_11",
                       "im_00", "im_01", "im_10", "im_11"]
    assert len(rows) == 4
    assert float(rows[2][2]) == pytest.approx(states[1, 0, 0].real)


# -- command line ---------------------------------------------------------------

def test_cli_dist_examples(capsys, files):
    code, out, _ = run(capsys, "dist", "--rho0", files["a"], "--rho1", files["a"], "--mode",
                       "wfs", "--alpha", 1)
    assert code == 0 and out["converged"] and out["distance"] <= 1e-8
    code, out, _ = run(capsys, "dist", "--rho0", files["one"], "--rho1", files["four"],
                       "--steps", 32)
    assert code == 0 and out["distance"] == pytest.approx(2.0, rel=1e-2)
    assert out["config"]["steps"] == 32 and out["config"]["alpha"] == 1.0


def test_cli_error_codes(capsys, files, tmp_path):
    two = put(tmp_path / "two.json", 2 * io.read_matrix(files["a"]))
    code, out, err = run(capsys, "dist", "--rho0", files["a"], "--rho1", two, "--mode",
                         "balanced")
    assert code == 2 and out is None and err["code"] == "E_TRACE"
    assert set(err) == {"code", "message", "context"}
    (tmp_path / "bad.json").write_text("[")
    assert run(capsys, "dist", "--rho0", tmp_path / "bad.json", "--rho1", files["a"])[2][
        "code"] == "E_PARSE"
    nh = tmp_path / "nh.json"
    nh.write_text(json.dumps({"n": 2, "re": [[1, 2], [0, 1]], "im": [[0, 0], [0, 0]]}))
    assert run(capsys, "dist", "--rho0", nh, "--rho1", files["a"])[2]["code"] == "E_HERM"
    neg = put(tmp_path / "neg.json", np.diag([1.0, -1.0]))
    assert run(capsys, "dist", "--rho0", neg, "--rho1", files["a"])[2]["code"] == "E_PD"
    assert run(capsys, "dist", "--rho0", files["one"], "--rho1", files["a"])[2][
        "code"] == "E_DIM"
    code, _, err = run(capsys, "dist", "--rho0", files["a"])
    assert code == 2 and err["code"] == "E_USAGE"
    code, _, err = run(capsys, "frobnicate")
    assert code == 2 and err["code"] == "E_USAGE"


def test_cli_nonconvergence_exit(capsys, files):
    code, out, _ = run(capsys, "dist", "--rho0", files["a"], "--rho1", files["b"],
                       "--max-iter", 1)
    assert code == 3 and out["converged"] is False and "distance" in out


def test_cli_interp(capsys, files):
    d = files["dir"]
    code, out, _ = run(capsys, "interp", "--rho0", files["a"], "--rho1", files["b"], "--times",
                       "0,0.5,1", "--out", d / "p.json")
    assert code == 0
    doc = json.loads((d / "p.json").read_text())
    assert doc["times"] == [0.0, 0.5, 1.0] and len(doc["matrices"]) == 3
    assert np.allclose(io.matrix_from_json(doc["matrices"][0]), io.read_matrix(files["a"]))
    code, _, _ = run(capsys, "interp", "--rho0", files["a"], "--rho1", files["b"], "--out",
                     d / "p.csv")
    assert code == 0 and len((d / "p.csv").read_text().splitlines()) == 6
    code, _, err = run(capsys, "interp", "--rho0", files["a"], "--rho1", files["b"], "--times",
                       "0,2", "--out", d / "x.json")
    assert code == 2 and err["code"] == "E_USAGE"


def test_cli_fields(capsys, tmp_path):
    from qmot.field import MatrixField
    f0 = MatrixField(np.array([[[1.0]], [[2.0]], [[1.0]]]), 0.5)
    f1 = MatrixField(np.array([[[2.0]], [[1.0]], [[1.5]]]), 0.5)
    io.write_json(io.field_to_json(f0), tmp_path / "f0.json")
    io.write_json(io.field_to_json(f1), tmp_path / "f1.json")
    code, out, _ = run(capsys, "dist-field", "--rho0", tmp_path / "f0.json", "--rho1",
                       tmp_path / "f1.json", "--cells-check", "--gamma", 2)
    assert code == 0 and out["cells_check"]["within_bound"]
    assert out["config"]["gamma"] == 2.0
    code, out, _ = run(capsys, "interp-field", "--rho0", tmp_path / "f0.json", "--rho1",
                       tmp_path / "f1.json", "--out", tmp_path / "fp.csv", "--traces-csv",
                       tmp_path / "tr.csv", "--steps", 8)
    assert code == 0
    rows = list(csv.reader(open(tmp_path / "tr.csv")))
    assert rows[0] == ["time", "cell_0", "cell_1", "cell_2"] and len(rows) == 10
    assert len((tmp_path / "fp.csv").read_text().splitlines()) == 1 + 5 * 3


def test_cli_metric(capsys, files, tmp_path):
    code, out, _ = run(capsys, "metric", "--rho", files["a"], "--delta", files["b"], "--mode",
                       "wfs")
    assert code == 0 and out["local_inner"] > 0
    assert out["bures"]["half_trace_G_delta"] == pytest.approx(out["bures"]["trace_rho_G2"])
    code, _, err = run(capsys, "metric", "--rho", files["a"], "--delta", files["b"], "--mode",
                       "balanced")
    assert code == 2 and err["code"] == "E_TRACE"


def test_cli_flow(capsys, files):
    d = files["dir"]
    code, out, _ = run(capsys, "flow", "--rho0", files["a"], "--functional", "quadratic",
                       "--target", files["b"], "--steps", 100, "--out", d / "traj.csv")
    assert code == 0 and not out["left_cone"]
    rows = list(csv.reader(open(d / "traj.csv")))
    assert rows[0] == ["step", "time", "value", "min_eig"] and len(rows) == 102
    side = json.loads((d / "traj.json").read_text())
    assert [s["step"] for s in side["samples"]] == list(range(0, 101, 10))
    code, _, err = run(capsys, "flow", "--rho0", files["a"], "--functional", "quadratic",
                       "--out", d / "t.csv")
    assert code == 2 and err["code"] == "E_USAGE"


def test_cli_ops_check(capsys, tmp_path):
    code, out, _ = run(capsys, "ops", "check", "--n", 3, "--trials", 20)
    assert code == 0 and out["passed"] and out["operators"]["null_space_rank"] == 8
    code, out, _ = run(capsys, "ops-check", "--n", 2, "--trials", 10)
    assert code == 0 and out["passed"]
    diag = {"n": 2, "matrices": [io.matrix_to_json(np.diag([1.0, 0.0])),
                                 io.matrix_to_json(np.diag([0.0, 1.0]))]}
    io.write_json(diag, tmp_path / "basis.json")
    code, _, err = run(capsys, "ops-check", "--n", 2, "--basis", tmp_path / "basis.json")
    assert code == 2 and err["code"] == "E_BASIS"


def test_cli_thread_env(capsys, files, monkeypatch):
    monkeypatch.setenv("QMOT_THREADS", "1")
    assert run(capsys, "dist", "--rho0", files["a"], "--rho1", files["b"])[0] == 0
    monkeypatch.setenv("QMOT_THREADS", "zero")
    assert run(capsys, "dist", "--rho0", files["a"], "--rho1", files["b"])[2][
        "code"] == "E_USAGE"


def test_console_script_deterministic(files):
    cmd = [sys.executable, "-m", "qmot.cli", "dist", "--rho0", files["a"], "--rho1", files["b"],
           "--mode", "wf", "--steps", "16"]
    first = subprocess.run(cmd, capture_output=True, check=True)
    second = subprocess.run(cmd, capture_output=True, check=True)
    assert first.stdout == second.stdout
    assert json.loads(first.stdout)["config"]["mode"] == "wf"


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["dist", "--help"])
    text = capsys.readouterr().out
    assert "(default: 32)" in text and "(default: 1.0)" in text


def test_installed_entry_point(files):
    import shutil
    exe = shutil.which("qmot")
    if exe is None:
        pytest.skip("console script not on PATH")
    res = subprocess.run([exe, "dist", "--rho0", files["one"], "--rho1", files["four"]],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stderr == ""
    assert json.loads(res.stdout)["distance"] == pytest.approx(2.0, rel=1e-2)
