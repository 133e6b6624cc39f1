from __future__ import annotations

import json
import subprocess
import sys

import pytest

from conftest import FIXTURES
from ratsys.cli import run
from ratsys.exprio import load_system


def fx(name: str) -> str:
    return str(FIXTURES / f"{name}.json")


def call(*argv):
    text, code = run(list(argv))
    return json.loads(text), code, text


def test_index_example4():
    doc, code, _ = call("index", fx("example4"))
    assert code == 0 and doc["n_o"] == 3


def test_check_ocf():
    doc, code, _ = call("check-ocf", fx("example3"))
    assert code == 0 and doc["is_ocf"] is True
    doc, code, _ = call("check-ocf", fx("example4"))
    assert code == 1 and doc["is_ocf"] is False


def test_validate():
    doc, code, _ = call("validate", fx("example3"))
    assert code == 0 and doc == {"valid": True, "violations": []}


def test_validate_reports_violations(tmp_path):
    spec = json.loads((FIXTURES / "example3.json").read_text())
    spec["x0"] = [0, 0]
    spec["f1"] = ["0", "1/x2"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(spec))
    doc, code, _ = call("validate", str(path))
    assert code == 1 and doc["violations"][0]["code"] == "denominator-at-x0"
    doc, code, _ = call("analyze", str(path))
    assert code == 2 and doc["error"]["kind"] == "validation"


def test_analyze_methods():
    for method in ("jacobian", "exact"):
        doc, code, _ = call("analyze", fx("example4"), "--method", method)
        assert code == 0 and doc["rationally_observable"] is True
    doc, code, _ = call("analyze", fx("unobservable"))
    assert code == 1 and doc["rationally_observable"] is False


def test_index_unobservable():
    doc, code, _ = call("index", fx("unobservable"))
    assert code == 1 and doc["n_o"] is None


def test_canonicalize(tmp_path):
    out = tmp_path / "ocf.json"
    doc, code, _ = call("canonicalize", fx("double_integrator_permuted"), "--out", str(out))
    assert code == 0 and doc["map"]["forward"] == ["x2", "x1"]
    assert doc["is_ocf"]["is_ocf"] is True
    s = load_system(out.read_text())
    assert s.variables == ("xb1", "xb2")
    doc, code, _ = call("canonicalize", fx("example4"))
    assert code == 2 and doc["error"]["kind"] == "missing-assumption"


def test_simulate_and_csv(tmp_path):
    csv_path = tmp_path / "traj.csv"
    doc, code, _ = call("simulate", fx("integrator"), "--input", "1:1", "--csv", str(csv_path))
    assert code == 0 and abs(doc["final_output"] - 1) < 1e-8
    assert csv_path.read_text().splitlines()[0] == "t,x,y"
    doc, code, _ = call("simulate", fx("pole"), "--input", "0:2")
    assert code == 1 and doc["status"]["kind"] == "denominator_zero"
    doc, code, _ = call("simulate", fx("integrator"), "--input", "bogus")
    assert code == 2


def test_compare(tmp_path):
    ocf = tmp_path / "ocf.json"
    call("canonicalize", fx("double_integrator_permuted"), "--out", str(ocf))
    doc, code, _ = call("compare", fx("double_integrator_permuted"), str(ocf), "--trials", "20", "--tol", "1e-6")
    assert code == 0 and doc["max_deviation"] < 1e-6 and doc["equivalent"]


def test_input_errors():
    for argv in (["bogus"], ["index"], ["index", fx("example4"), "--nope"], ["index", "missing.json"]):
        doc, code, _ = call(*argv)
        assert code == 2 and "error" in doc


def test_budget_env(monkeypatch):
    monkeypatch.setenv("RATSYS_BUDGET", "100:1")
    doc, code, _ = call("analyze", fx("example4"), "--method", "exact")
    assert code == 3 and doc["error"]["kind"] == "budget"
    monkeypatch.setenv("RATSYS_BUDGET", "garbage")
    doc, code, _ = call("index", fx("example4"))
    assert code == 2
    monkeypatch.delenv("RATSYS_BUDGET")
    from ratsys.groebner import Budget, set_default_budget

    set_default_budget(Budget())


def test_byte_identical_output_and_no_files(tmp_path):
    argv = [sys.executable, "-m", "ratsys", "compare", fx("example3"), fx("example3"), "--trials", "3", "--seed", "4"]
    a = subprocess.run(argv, capture_output=True, cwd=tmp_path, check=False)
    b = subprocess.run(argv, capture_output=True, cwd=tmp_path, check=False)
    assert a.returncode == 0 and a.stdout == b.stdout
    json.loads(a.stdout)
    assert list(tmp_path.iterdir()) == []


def test_usage_goes_to_stderr():
    p = subprocess.run([sys.executable, "-m", "ratsys", "frobnicate"], capture_output=True, text=True, check=False)
    assert p.returncode == 2
    assert "usage" in p.stderr
    assert json.loads(p.stdout)["error"]["kind"] == "usage"
