import csv
import io
import json
import subprocess
import sys


from hybridocl.cli import EXIT_ENV, EXIT_FAIL, EXIT_OK, EXIT_USAGE, effective_cap, main
from hybridocl.loader import fixture_paths

from conftest import requires_z3


def _files(name):
    mp, cp = fixture_paths(name)
    return ["--model", str(mp), "--constraints", str(cp)]


def _generate(tmp_path, *extra):
    out = tmp_path / "inst.json"
    code = main(["generate", *_files("tax"), "--root", "TaxPayer:1", "--seed", "3", "--out", str(out), *extra])
    return code, out


def test_effective_cap_covers_roots():
    assert effective_cap(5, [("TaxPayer", 40)]) == 40
    assert effective_cap(30, [("TaxPayer", 2)]) == 30


@requires_z3
def test_generate_then_check(tmp_path, capsys):
    code, out = _generate(tmp_path)
    assert code == EXIT_OK
    capsys.readouterr()
    assert main(["check", *_files("tax"), "--root", "TaxPayer:1", "--instance", str(out)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "valid"


@requires_z3
def test_check_names_violated_invariants(tmp_path, capsys):
    code, out = _generate(tmp_path)
    assert code == EXIT_OK
    d = json.loads(out.read_text())
    for o in d["objects"]:
        if o["class"] == "TaxPayer":
            o["attributes"]["birthYear"]["value"] = 1000
    out.write_text(json.dumps(d))
    capsys.readouterr()
    assert main(["check", *_files("tax"), "--instance", str(out)]) == EXIT_FAIL
    text = capsys.readouterr().out
    assert "PhysicalPerson::C1 violated by TaxPayer" in text


def test_check_requires_instance(capsys):
    assert main(["check", *_files("tax")]) == EXIT_USAGE


def test_check_reports_unmet_root(tmp_path, capsys):
    mp, _ = fixture_paths("tax")
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"objects": [], "links": []}))
    assert main(["check", *_files("tax"), "--root", "TaxPayer:1", "--instance", str(empty)]) == EXIT_FAIL
    assert "non-emptiness constraint violated" in capsys.readouterr().out


@requires_z3
def test_report_and_trace(tmp_path):
    rep, trace = tmp_path / "r.json", tmp_path / "t.csv"
    code, _ = _generate(tmp_path, "--report", str(rep), "--report-timings", "--trace", str(trace))
    assert code == EXIT_OK
    d = json.loads(rep.read_text())
    assert d["status"] == "Solved" and "timings" in d
    rows = list(csv.reader(io.StringIO(trace.read_text())))
    assert rows[0] == ["iteration", "rawDistance", "objectCount"]
    assert len(rows) >= 2


@requires_z3
def test_dump_smt_directory(tmp_path):
    d = tmp_path / "smt"
    code = main(["generate", *_files("budget"), "--root", "Household:1", "--seed", "0", "--out", str(tmp_path / "o.json"), "--dump-smt", str(d)])
    assert code == EXIT_OK
    scripts = sorted(d.glob("*.smt2"))
    assert scripts and "(check-sat)" in scripts[0].read_text()


def test_dump_nnf_and_labels(capsys):
    assert main(["dump", "nnf", *_files("tax"), "--root", "TaxPayer:1"]) == EXIT_OK
    nnf = capsys.readouterr().out
    assert "TaxPayer.allInstances()->size() >= 1" in nnf
    assert main(["dump", "labels", *_files("tax"), "--root", "TaxPayer:1"]) == EXIT_OK
    assert "smt=" in capsys.readouterr().out


def test_dump_smt_on_empty_instance_reports_no_script(capsys):
    assert main(["dump", "smt", *_files("tax"), "--root", "TaxPayer:1"]) == EXIT_FAIL
    assert "no SMT script" in capsys.readouterr().err


def test_dump_without_root_is_usage_error(capsys):
    assert main(["dump", "nnf", *_files("tax")]) == EXIT_USAGE


def test_unknown_command_is_usage_error(capsys):
    assert main(["frobnicate"]) == EXIT_USAGE


def test_root_and_non_emptiness_are_exclusive(capsys):
    assert main(["dump", "nnf", *_files("tax"), "--root", "TaxPayer", "--non-emptiness", "true"]) == EXIT_USAGE


def test_malformed_root_is_usage_error(capsys):
    assert main(["dump", "nnf", *_files("tax"), "--root", "Tax Payer:x"]) == EXIT_USAGE


def test_missing_model_file(tmp_path, capsys):
    assert main(["dump", "nnf", "--model", str(tmp_path / "none.json"), "--root", "A:1"]) == EXIT_USAGE


def test_bad_constraint_file(tmp_path, capsys):
    mp, _ = fixture_paths("tax")
    bad = tmp_path / "bad.ocl"
    bad.write_text("context TaxPayer inv X: self.nosuch > 1\n")
    assert main(["dump", "nnf", "--model", str(mp), "--constraints", str(bad), "--root", "TaxPayer:1"]) == EXIT_USAGE
    assert "nosuch" in capsys.readouterr().err


def test_missing_solver_is_environment_error(tmp_path, capsys):
    code = main(["generate", *_files("tax"), "--root", "TaxPayer:1", "--smt-solver", str(tmp_path / "nope")])
    assert code == EXIT_ENV


def test_baseline_budget_exhaustion_exits_one(tmp_path, capsys):
    out = tmp_path / "o.json"
    code = main(["baseline", *_files("tax"), "--root", "TaxPayer:1", "--max-iterations", "0", "--out", str(out)])
    assert code == EXIT_FAIL
    assert not out.exists()
    assert "BudgetExhausted" in capsys.readouterr().err


@requires_z3
def test_config_file_and_flag_precedence(tmp_path, capsys):
    mp, cp = fixture_paths("tax")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": str(mp), "constraints": str(cp), "root": ["TaxPayer:1"], "max_iterations": 0}))
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "a.json")]) == EXIT_FAIL
    assert main(["generate", "--config", str(cfg), "--max-iterations", "100", "--out", str(tmp_path / "b.json")]) == EXIT_OK


@requires_z3
def test_bench_csv_and_ztest(tmp_path, capsys):
    out, rep = tmp_path / "b.csv", tmp_path / "b.txt"
    code = main(
        ["bench", *_files("budget"), "--root", "Household:1", "--sizes", "1", "--runs", "2",
         "--mode", "both", "--max-iterations", "5", "--out", str(out), "--report", str(rep)]
    )
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 4
    assert {"search", "check", "smt_build", "smt_solve", "lift"} <= set(rows[0])
    assert "two-proportion z-test" in rep.read_text()


def test_bench_needs_one_root(capsys):
    assert main(["bench", *_files("tax"), "--root", "TaxPayer:1", "--root", "Child:1"]) == EXIT_USAGE


@requires_z3
def test_module_entry_point(tmp_path):
    out = tmp_path / "o.json"
    r = subprocess.run(
        [sys.executable, "-m", "hybridocl", "generate", *_files("tax"), "--root", "TaxPayer:1", "--out", str(out)],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert r.returncode == 0, r.stderr
    assert json.loads(out.read_text())["objects"]
