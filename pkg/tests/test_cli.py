import json
import math
import subprocess
import sys

import pytest

from proxreg import scenarios as sc
from proxreg.cli import main
from proxreg.report import ExperimentReport


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_project_hyperbolic(capsys):
    code, out, _ = run(capsys, "project", "--set", "hyperbolic-strip", "--point", "0.3,3")
    data = json.loads(out)
    assert code == 0
    assert data["outputs"]["point"] == pytest.approx([0.3, 2.0], abs=1e-6)
    assert data["outputs"]["dist"] == pytest.approx(math.log(1.5), abs=1e-8)
    assert set(["point", "dist", "unique", "iterations"]) <= set(data["outputs"])


def test_project_inside(capsys):
    code, out, _ = run(capsys, "project", "--set", "sphere-cap:theta0=2.0944", "--point", "2.0,0.0")
    data = json.loads(out)
    assert code == 0 and data["outputs"]["point"] == [2.0, 0.0] and data["outputs"]["dist"] == 0.0


def test_project_comb_grid(capsys):
    code, out, _ = run(capsys, "project", "--set", "comb:N=50", "--point", "0.03,0.5", "--grid")
    data = json.loads(out)
    assert code == 0
    assert data["outputs"]["unique"] is False
    assert len(data["outputs"]["nearest_candidates"]) == 4


@pytest.mark.parametrize("example", ["sphere", "hyperbolic", "comb"])
def test_reproduce(capsys, example):
    code, out, err = run(capsys, "reproduce", example)
    assert code == 0, err
    rep = ExperimentReport.from_json(out)
    assert rep.passed and rep.assertions


@pytest.mark.parametrize("argv", [
    ["check", "cones", "--seed", "7", "--n", "200"],
    ["check", "ddp", "--set", "sphere-cap", "--n", "10"],
    ["check", "hess", "--manifold", "sphere2", "--n", "100"],
    ["check", "shapiro"],
    ["check", "lip", "--set", "euclidean-halfplane", "--n", "20"],
    ["check", "variation", "--n", "6"],
])
def test_check_suites(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    assert json.loads(out)["passed"] is True


def test_failing_assertion_exit_code(capsys):
    code, out, err = run(capsys, "check", "ddp", "--set", "hyperbolic-strip", "--n", "3", "--tol", "1e-300")
    assert code == 1 and "FAIL" in err


def test_error_exit_code(capsys):
    code, _, err = run(capsys, "project", "--set", "nope", "--point", "1,2")
    assert code == 2 and "error" in err
    code, _, err = run(capsys, "project", "--set", "hyperbolic-strip", "--point", "1,-2")
    assert code == 2


def test_byte_stable_and_round_trip(capsys):
    argv = ["check", "hess", "--manifold", "hyperbolic2", "--n", "20", "--seed", "3"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    rep = ExperimentReport.from_json(a)
    assert rep.to_json() == a
    assert all(x.name in rep.tolerances for x in rep.assertions)


def test_csv_output(capsys):
    code, out, _ = run(capsys, "reproduce", "comb", "--format", "csv")
    lines = out.splitlines()
    assert code == 0
    assert lines[1] == "assertion,value,op,target,tol,passed"
    assert "# reach" in lines
    assert any(line.startswith("reach_decreases_N50,") for line in lines)


def test_solve_with_curve_and_plot(tmp_path, capsys):
    curve = tmp_path / "start.json"
    curve.write_text(json.dumps(sc.hyperbolic_start(n=30).to_dict()))
    out = tmp_path / "run" / "solve.json"
    argv = ["solve", "--set", "hyperbolic-strip", "--curve", str(curve), "--out", str(out), "--plot"]
    assert main(argv) == 0
    svg = tmp_path / "run" / "solve-length.svg"
    first = svg.read_bytes()
    assert (tmp_path / "run" / "solve-residual.svg").exists()
    assert main(argv) == 0
    assert svg.read_bytes() == first
    assert b"<dc:date>" not in first
    data = json.loads(out.read_text())
    assert data["outputs"]["solver"]["status"] == "converged"
    assert len(data["outputs"]["curve"]["points"]) == 31
    capsys.readouterr()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "proxreg", "project", "--set", "euclidean-halfplane",
                          "--point", "0.5,2"], capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["outputs"]["point"] == [0.5, 0.0]


def test_project_json_config_set(tmp_path, capsys):
    cfg = tmp_path / "disk.json"
    cfg.write_text(json.dumps({"manifold": "euclidean", "psi": "1 - (x1*x1 + x2*x2)",
                               "solidity": "solid", "interior_sample": [2.0, 0.0]}))
    code, out, _ = run(capsys, "project", "--set", str(cfg), "--point", "0.6,0.8")
    assert code == 0
    assert json.loads(out)["outputs"]["dist"] == 0.0
    code, out, _ = run(capsys, "project", "--set", str(cfg), "--point", "0.3,0.4")
    assert json.loads(out)["outputs"]["point"] == pytest.approx([0.6, 0.8], abs=1e-8)
