import json
import subprocess
import sys

import numpy as np
import pytest

from heisenberg_cr import __version__
from heisenberg_cr.cli import main, parse_point, parse_word, UsageError
from heisenberg_cr.core_group import Point


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- verify ------------------------------------------------------------------

def test_verify_group_suite(capsys, tmp_path):
    out_file = tmp_path / "report.json"
    code, _, _ = run(capsys, "verify", "--suite", "group", "--dim", "1", "--seed", "7",
                     "--out", str(out_file))
    assert code == 0
    rep = json.loads(out_file.read_text())
    ids = [r["check_id"] for r in rep["records"]]
    assert "group.associativity" in ids
    assert ids == sorted(ids)
    assert rep["verdict"] == "pass" and rep["artifact_version"] == __version__
    assert rep["config"]["n"] == 1 and rep["config"]["seed"] == 7
    assert rep["config"]["canonical"] is True
    for r in rep["records"]:
        assert {"check_id", "anchor", "points", "max_residual", "tolerance", "passed"} <= set(r)


def test_verify_is_deterministic(capsys):
    _, a, _ = run(capsys, "verify", "--suite", "jets", "--seed", "3")
    _, b, _ = run(capsys, "verify", "--suite", "jets", "--seed", "3")
    assert a == b and json.loads(a)["verdict"] == "pass"


def test_verify_unknown_suite(capsys):
    code, out, err = run(capsys, "verify", "--suite", "foo")
    assert code == 2
    assert "group" in err and "grid-lite" in err
    assert out == ""


def test_verify_failure_still_writes_report(capsys, tmp_path):
    out_file = tmp_path / "r.json"
    code, _, err = run(capsys, "verify", "--suite", "group", "--tol-scale", "1e-30",
                       "--out", str(out_file))
    assert code == 1
    rep = json.loads(out_file.read_text())
    assert rep["verdict"] == "fail" and rep["config"]["canonical"] is False
    assert "FAIL" in err


# -- tensor ------------------------------------------------------------------

def test_tensor_constant_field(capsys):
    code, out, _ = run(capsys, "tensor", "--field", "1", "--point", "0.3;0.2;0.1")
    assert code == 0
    d = json.loads(out)
    assert np.array_equal(d["A"], np.zeros((2, 2)))
    assert d["sigma"] == [0.0, 0.0]


def test_tensor_trace_identity_at_origin(capsys):
    code, out, _ = run(capsys, "tensor", "--field", "exp(0.1*znorm2)", "--point", "0;0;0")
    assert code == 0
    d = json.loads(out)
    Q = 4
    assert d["sigma"][0] == pytest.approx(-2 / (Q - 2) * d["sublaplacian"], rel=1e-14)
    assert d["sublaplacian"] == pytest.approx(0.4, rel=1e-14)
    assert d["trace_identity_residual"] <= 1e-12
    assert d["spectrum"] == sorted(d["spectrum"])


def test_tensor_n2(capsys, tmp_path):
    out_file = tmp_path / "t.json"
    code, _, _ = run(capsys, "tensor", "--dim", "2", "--field", "((1 + znorm2())^2 + t^2)^(-QM2/4)",
                     "--point", "0.1,0.2;-0.3,0.4;0.5", "--out", str(out_file))
    assert code == 0
    d = json.loads(out_file.read_text())
    assert np.asarray(d["A"]).shape == (4, 4) and len(d["sigma"]) == 4


def test_tensor_parse_error(capsys):
    code, _, err = run(capsys, "tensor", "--field", "exp(x1 +", "--point", "0;0;0")
    assert code == 2 and "byte 8" in err


@pytest.mark.parametrize("field, point", [("x1", "--point=-1;0;0"), ("log(t)", "--point=0;0;-1")])
def test_tensor_domain_errors(capsys, field, point):
    code, _, _ = run(capsys, "tensor", "--field", field, point)
    assert code == 3


def test_tensor_bad_point(capsys):
    code, _, _ = run(capsys, "tensor", "--field", "1", "--point", "1;2")
    assert code == 2


# -- solve -------------------------------------------------------------------

def test_solve_even_grid(capsys):
    code, _, err = run(capsys, "solve", "--grid", "4")
    assert code == 2 and "odd" in err


def test_solve_negative_eps(capsys):
    code, _, _ = run(capsys, "solve", "--grid", "9", "--eps", "-0.1")
    assert code == 2


def test_solve_writes_csv_and_sidecar(capsys, tmp_path):
    out = tmp_path / "sol.csv"
    code, _, _ = run(capsys, "solve", "--grid", "21", "--eps", "0", "--out", str(out))
    assert code == 0
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["converged"] and side["residual"] <= 1e-8
    assert side["origin_value"] > 0
    assert out.read_text().startswith("x,y,t,value,mask\n")


def test_solve_eps_sequence(capsys, tmp_path):
    # sup-difference against the eps = 0 run shrinks as eps is halved
    vals = {}
    for eps in ("0", "0.01", "0.005"):
        out = tmp_path / f"e{eps}.csv"
        code, _, _ = run(capsys, "solve", "--grid", "21", "--eps", eps, "--out", str(out))
        assert code == 0
        vals[eps] = np.genfromtxt(out, delimiter=",", skip_header=1, usecols=3)
    interior = np.isfinite(vals["0"])
    d1 = np.max(np.abs(vals["0.01"] - vals["0"])[interior])
    d2 = np.max(np.abs(vals["0.005"] - vals["0"])[interior])
    assert d1 > d2 > 0


# -- map ---------------------------------------------------------------------

def test_map_check_inversion(capsys):
    code, out, _ = run(capsys, "map", "--word", "check", "--point", "1;0;1")
    assert code == 0
    d = json.loads(out)
    assert np.allclose(d["image"], [-0.5, -0.5, 0.5], atol=1e-15)
    # |xi|^4 = 2, so |xi|^(-2Q) = 2^-2
    assert d["jacobian_det"] == pytest.approx(0.25, rel=1e-14)


def test_map_word(capsys):
    code, out, _ = run(capsys, "map", "--word", "translate(1;0;0)/dilate(2)/rotate(0)/iota",
                       "--point", "0;1;0")
    assert code == 0
    # (0,1,0) o (1,0,0) = (1, 1, -2); dilate -> (2, 2, -8); iota -> (2, -2, 8)
    assert json.loads(out)["image"] == [2.0, -2.0, 8.0]


def test_map_singular(capsys):
    code, _, _ = run(capsys, "map", "--word", "check", "--point", "0;0;0")
    assert code == 3


@pytest.mark.parametrize("word", ["", "shear(1)", "rotate(1,2)", "dilate(x)", "iota(1)"])
def test_map_bad_words(capsys, word):
    code, _, _ = run(capsys, "map", "--word", word, "--point", "0;1;0")
    assert code == 2


def test_parse_helpers():
    assert parse_point("1,2;3,4;5", 2) == Point([1, 2], [3, 4], 5)
    with pytest.raises(UsageError):
        parse_point("1;2;nan", 1)
    with pytest.raises(UsageError):
        parse_point("1,2;3;5", 2)
    assert len(parse_word("check/check", 1).word) == 2


def test_no_command_is_usage_error(capsys):
    assert main([]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "heisenberg_cr", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and __version__ in r.stdout
