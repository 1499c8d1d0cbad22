import csv
import io
import json
import subprocess
import sys

import pytest

from subsfm.algorithms import exact_sfm
from subsfm.cli import UsageError, main, parse_generator
from subsfm.oracle import CountingOracle, random_table_instance

REPORT_KEYS = {"algorithm", "minimizer", "value", "eval_calls", "iterations", "batches", "seed", "elapsed_ms"}


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_exact_json_schema():
    code, text = run("run", "--alg", "exact", "--gen", "table:n=5,wmax=2,items=2,seed=3", "--M", "8")
    assert code == 0
    row = json.loads(text)
    assert set(row) == REPORT_KEYS
    assert row["algorithm"] == "exact"
    assert isinstance(row["minimizer"], list)


def test_runs_are_deterministic_apart_from_timing():
    args = ("run", "--alg", "approx", "--gen", "table:n=4,unit=1,integer=0,seed=2", "--eps", "0.5",
            "--seed", "5", "--trials", "2")
    rows_a = [json.loads(line) for line in run(*args)[1].splitlines()]
    rows_b = [json.loads(line) for line in run(*args)[1].splitlines()]
    for a, b in zip(rows_a, rows_b):
        a.pop("elapsed_ms"), b.pop("elapsed_ms")
        assert a == b
    assert [r["seed"] for r in rows_a] == [5, 6]


def test_eval_calls_match_a_direct_run():
    f = random_table_instance(5, 3, weight_max=2, items=2)
    oracle = CountingOracle(f, require_integer=True)
    direct = exact_sfm(oracle, 8, seed=0)
    _, text = run("run", "--alg", "exact", "--gen", "table:n=5,wmax=2,items=2,seed=3", "--M", "8")
    assert json.loads(text)["eval_calls"] == direct.eval_calls


def test_csv_output_columns():
    code, text = run("run", "--alg", "mincut", "--gen", "cut:n=6,density=0.4,wmax=2,seed=1", "--eps", "0.3",
                     "--out", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert set(rows[0]) == REPORT_KEYS


def test_lowerbound_csv():
    code, text = run("run", "--alg", "lowerbound", "--gen", "lb:n=32", "--trials", "50", "--out", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == ["n", "mean_queries", "std"]
    assert int(rows[0]["n"]) == 32 and float(rows[0]["mean_queries"]) >= 8


def test_verify_json(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("table 2\n0 0\n1 -1\n2 1\n3 0\n")
    code, text = run("run", "--alg", "verify", "--instance", str(path))
    assert code == 0
    assert json.loads(text) == {"n": 2, "submodular": True, "witness": None, "minimizer": [0], "value": -1}


def test_verify_reports_violation(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("table 2\n0 0\n1 0\n2 0\n3 1\n")
    row = json.loads(run("run", "--alg", "verify", "--instance", str(path))[1])
    assert row["submodular"] is False and row["witness"]["i"] in (0, 1)


def test_mult_and_sparse_variants():
    code, text = run("run", "--alg", "mult", "--gen", "table:n=4,nonpositive=1,seed=1", "--delta", "0.5")
    assert code == 0 and json.loads(text)["value"] <= 0
    code, text = run("run", "--alg", "sparse-exact", "--gen", "table:n=4,wmax=2,items=2,seed=1", "--M", "6",
                     "--s", "2")
    assert code == 0 and json.loads(text)["algorithm"] == "sparse-exact"
    code, text = run("run", "--alg", "sparse-approx", "--gen", "table:n=4,unit=1,integer=0", "--eps", "0.5",
                     "--s", "2")
    assert code == 0


@pytest.mark.parametrize("argv", [
    ("run", "--alg", "exact", "--gen", "cut:n=4"),
    ("run", "--alg", "approx", "--gen", "cut:n=4"),
    ("run", "--alg", "sparse-exact", "--gen", "cut:n=4", "--M", "3"),
    ("run", "--alg", "mult", "--gen", "cut:n=4"),
    ("run", "--alg", "exact", "--gen", "cut:n=4,colour=3", "--M", "3"),
    ("run", "--alg", "exact", "--gen", "tree:n=4", "--M", "3"),
    ("run", "--alg", "bogus", "--gen", "cut:n=4"),
    ("run", "--alg", "exact", "--M", "3"),
    ("run", "--alg", "mincut", "--gen", "table:n=3", "--eps", "0.5"),
])
def test_usage_errors_exit_2(argv, capsys):
    assert run(*argv)[0] == 2


def test_bad_instance_exits_1(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("cut 3 0 2\n0 1 2\n1 2 x\n")
    code, _ = run("run", "--alg", "exact", "--instance", str(path), "--M", "5")
    assert code == 1
    assert "bad.txt:3:" in capsys.readouterr().err


def test_contract_violation_exits_1(tmp_path, capsys):
    code, _ = run("run", "--alg", "exact", "--gen", "table:n=3,unit=1,integer=0", "--M", "1")
    assert code == 1
    # the first gradient evaluation reads f({0}) = 1
    path = tmp_path / "positive.txt"
    path.write_text("table 2\n0 0\n1 1\n2 -1\n3 0\n")
    code, _ = run("run", "--alg", "mult", "--instance", str(path), "--delta", "0.5")
    assert code == 1


def test_parse_generator():
    assert parse_generator("cut:n=5,density=0.5") == ("cut", {"n": 5, "density": 0.5})
    with pytest.raises(UsageError):
        parse_generator("cut:density=0.5")
    with pytest.raises(UsageError):
        parse_generator("cut:n=five")


def test_workers_keep_trial_order():
    args = ("run", "--alg", "approx", "--gen", "table:n=3,unit=1,integer=0,seed=4", "--eps", "0.5",
            "--trials", "3", "--seed", "10")
    serial = [json.loads(line) for line in run(*args)[1].splitlines()]
    parallel = [json.loads(line) for line in run(*args, "--workers", "2")[1].splitlines()]
    assert [r["seed"] for r in parallel] == [10, 11, 12]
    for a, b in zip(serial, parallel):
        a.pop("elapsed_ms"), b.pop("elapsed_ms")
        assert a == b


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "subsfm", "run", "--alg", "verify", "--gen", "cut:n=4,seed=1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["submodular"] is True
