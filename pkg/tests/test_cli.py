import csv
import json
import subprocess
import sys

import pytest

from rrglab.cli import main
from rrglab.config import CAPS
from rrglab.graph import Graph

from conftest import K


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sample_deterministic(capsys):
    code, a, _ = run(capsys, "sample", "--n", "8", "--d", "3", "--trials", "10", "--seed", "1")
    _, b, _ = run(capsys, "sample", "--n", "8", "--d", "3", "--trials", "10", "--seed", "1")
    _, c, _ = run(capsys, "sample", "--n", "8", "--d", "3", "--trials", "10", "--seed", "2")
    assert code == 0 and a == b and a != c
    graphs = [Graph.from_text(t) for t in a.strip().split("\n\n")]
    assert len(graphs) == 10 and all(g.is_regular(3) for g in graphs)


def test_rrg_seed_overrides(capsys, monkeypatch):
    _, a, _ = run(capsys, "sample", "--n", "8", "--d", "3", "--trials", "3", "--seed", "5")
    monkeypatch.setenv("RRG_SEED", "5")
    _, b, _ = run(capsys, "sample", "--n", "8", "--d", "3", "--trials", "3", "--seed", "99")
    assert a == b


def test_count_k4(capsys, tmp_path):
    path = tmp_path / "k4.graph"
    path.write_text(K(4).to_text())
    code, out, _ = run(capsys, "count", "--input", str(path))
    assert code == 0 and json.loads(out) == {"pm": 3, "triangles": 4, "ordered_1f": 6}


def test_tv_command(capsys):
    code, out, _ = run(capsys, "tv", "--n", "8", "--p", "mu2 + mu1", "--q", "mu3")
    rep = json.loads(out)
    assert code == 0 and rep["estimates"]["tv"] == {"num": 2720, "den": 38157, "float": 2720 / 38157} and "config_hash" in rep


@pytest.mark.slow
def test_couple_inclusion_example(capsys, tmp_path):
    argv = ["couple", "inclusion", "--n", "8", "--d1", "3", "--d2", "5", "--trials", "10000", "--seed", "7"]
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    code, _, _ = run(capsys, *argv, "--output", str(out_a), "--csv", str(tmp_path / "a.csv"))
    assert code == 0
    run(capsys, *argv, "--output", str(out_b), "--workers", "2")
    assert out_a.read_bytes() == out_b.read_bytes()
    rep = json.loads(out_a.read_text())
    assert rep["estimates"]["inclusion_rate"] >= 0.99
    assert "tv_composition" in rep["references"] and rep["config_hash"]
    rows = list(csv.DictReader(open(tmp_path / "a.csv")))
    assert len(rows) == 1 and float(rows[0]["inclusion_rate"]) >= 0.99


def test_couple_maximal_and_zeta(capsys):
    code, out, _ = run(capsys, "couple", "maximal", "--n", "6", "--p", "mu1 + mu1", "--q", "mu2")
    assert code == 0 and json.loads(out)["checks"]["diagonal_is_one_minus_tv"]
    code, out, _ = run(capsys, "couple", "zeta", "--n", "8", "--d", "3", "--epsilon", "0.05",
                       "--trials", "5000", "--seed", "3")
    assert code == 0 and json.loads(out)["estimates"]["k"] == 5


def test_experiment_csv_rows(capsys, tmp_path):
    path = tmp_path / "m.csv"
    code, out, _ = run(capsys, "experiment", "moments", "--n", "10", "12", "--d", "3",
                       "--statistic", "triangles", "--trials", "2000", "--seed", "1", "--csv", str(path))
    rows = list(csv.DictReader(open(path)))
    assert code == 0 and [r["n"] for r in rows] == ["10", "12"]
    assert len(json.loads(out)) == 2


def test_exit_code_precondition(capsys):
    code, _, err = run(capsys, "sample", "--n", "7", "--d", "3", "--seed", "1")
    assert code == 2 and "precondition" in err


def test_exit_code_budget(capsys, monkeypatch):
    monkeypatch.setattr(CAPS, "rejection_budget", 1)
    code, _, err = run(capsys, "sample", "--n", "12", "--d", "8", "--trials", "5", "--seed", "1")
    assert code == 3 and "budget" in err


def test_suite_acceptance_only_overlay(capsys):
    code, out, err = run(capsys, "suite", "acceptance", "--only", "overlay")
    rep = json.loads(out)
    assert code == 0 and [r["name"] for r in rep["results"]] == ["overlay"]
    assert "PASS" in err and rep["config_hash"]


def test_suite_reports_bit_identical(capsys):
    _, a, _ = run(capsys, "suite", "acceptance", "--only", "maximal,edgeprob")
    _, b, _ = run(capsys, "suite", "acceptance", "--only", "maximal", "--only", "edgeprob")
    assert a == b


def test_suite_calibration(capsys):
    code, out, _ = run(capsys, "suite", "calibration", "--seed", "1")
    rep = json.loads(out)
    assert code == 0 and rep["ks_chi_square"] < 0.02 and all(rep["checks"].values())


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rrglab.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for sub in ("sample", "count", "tv", "couple", "experiment", "suite"):
        assert sub in res.stdout
