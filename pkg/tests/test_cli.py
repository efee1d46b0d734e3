import csv
import io
import json

import pytest
from click.testing import CliRunner

from wanqubo.cli import main
from wanqubo.ilp import load_ilp
from wanqubo.qubo import import_qubo, read_qubo_header
from wanqubo.sampler import read_jsonl

FAST = ["-n", "50", "--sweeps", "50"]
SMALL = ["--max-demands", "2", "-k", "1"]


def run(*args):
    result = CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)
    return result


def test_generate_writes_files(tmp_path):
    out = tmp_path / "gen"
    r = run("generate", "-o", out)
    assert r.exit_code == 0, r.output
    for name in ("topology.json", "demands.json", "catalog.json", "ilp.txt", "qubo.txt", "config.json"):
        assert (out / name).exists()
    assert read_qubo_header(out / "qubo.txt")["N"] == 90
    m = load_ilp(out / "ilp.txt")
    assert m.A.shape == (21, 30)
    assert import_qubo(out / "qubo.txt").N == 90
    assert "N=90" in r.output


def test_generate_with_config_and_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_nodes": 4, "a": 2, "penalty": 8.0}))
    r = run("generate", "--config", cfg, "--nodes", 3, "-o", tmp_path / "o")
    assert r.exit_code == 0, r.output
    saved = json.loads((tmp_path / "o" / "config.json").read_text())
    assert saved["n_nodes"] == 3 and saved["a"] == 2 and saved["penalty"] == 8.0
    assert read_qubo_header(tmp_path / "o" / "qubo.txt")["penalty"] == 8.0


def test_bad_config_exits_3(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run("generate", "--config", cfg, "-o", tmp_path).exit_code == 3
    assert run("generate", "--nodes", 20, "-o", tmp_path).exit_code == 3
    assert run("solve", "--schedule", "100@1.5+20", "-o", tmp_path).exit_code == 3
    assert run("solve", "--method", "exhaustive", "-o", tmp_path).exit_code == 3  # N=90 over budget


def test_oracle_command(tmp_path):
    r = run("oracle")
    assert r.exit_code == 0
    assert "optimal cost = 6" in r.output
    r = run("oracle", *SMALL)
    assert "optimal cost = 2" in r.output


def test_oracle_infeasible_exits_2():
    assert run("oracle", "--eta-max", 1).exit_code == 2


def test_solve_and_report(tmp_path):
    r = run("solve", *FAST, "-o", tmp_path)
    assert r.exit_code == 0, r.output
    recs = read_jsonl(tmp_path / "results.jsonl")
    assert len(recs) == 50
    assert {"bits", "energy", "feasible", "cost", "p", "a", "schedule", "oracle_cost"} <= set(recs[0])
    assert recs[0]["oracle_cost"] == 6
    r = run("report", tmp_path / "results.jsonl", "-o", tmp_path)
    assert r.exit_code == 0, r.output
    assert "oracle cost = 6" in r.output
    rows = list(csv.DictReader(io.StringIO((tmp_path / "report.csv").read_text())))
    assert len(rows) == 1 and rows[0]["total"] == "50"


def test_exhaustive_solve_matches_oracle(tmp_path):
    r = run("solve", *SMALL, "--method", "exhaustive", "-o", tmp_path)
    assert r.exit_code == 0, r.output
    [rec] = read_jsonl(tmp_path / "results.jsonl")
    assert rec["feasible"] and rec["cost"] == rec["oracle_cost"] == 2
    r = run("report", tmp_path / "results.jsonl", "-o", tmp_path)
    assert "best feasible cost = 2" in r.output
    assert "oracle cost = 2" in r.output


def test_sweep_cells(tmp_path):
    r = run("sweep", "-n", 1000, "--sweeps", 20, "--penalties", "2,4", "--accuracies", "1,2", "-o", tmp_path)
    assert r.exit_code == 0, r.output
    recs = read_jsonl(tmp_path / "results.jsonl")
    assert len(recs) == 4000
    cells = {(rec["p"], rec["a"]) for rec in recs}
    assert cells == {(2.0, 1), (4.0, 1), (2.0, 2), (4.0, 2)}
    assert "4 cells" in r.output


def test_sweep_schedules(tmp_path):
    r = run("sweep", *FAST, "--penalties", "4", "--accuracies", "1", "--schedules", "1,100@0.35+20", "-o", tmp_path)
    assert r.exit_code == 0, r.output
    recs = read_jsonl(tmp_path / "results.jsonl")
    assert {rec["schedule"] for rec in recs} == {"1", "100@0.35+20"}
    r = run("report", tmp_path / "results.jsonl", "-o", tmp_path)
    assert "schedule=1 " in r.output and "schedule=100@0.35+20 " in r.output


def test_sweep_is_deterministic(tmp_path):
    args = ["sweep", *FAST, "--penalties", "1,4", "--accuracies", "1"]
    run(*args, "-o", tmp_path / "a")
    run(*args, "-o", tmp_path / "b")
    assert (tmp_path / "a" / "results.jsonl").read_bytes() == (tmp_path / "b" / "results.jsonl").read_bytes()


def test_single_cell_sweep_equals_solve(tmp_path):
    run("sweep", *FAST, "-p", 4, "--penalties", "4", "--accuracies", "1", "-o", tmp_path / "s")
    run("solve", *FAST, "-p", 4, "-a", 1, "-o", tmp_path / "o")
    assert (tmp_path / "s" / "results.jsonl").read_bytes() == (tmp_path / "o" / "results.jsonl").read_bytes()


def test_append(tmp_path):
    run("solve", *FAST, "-o", tmp_path)
    run("solve", *FAST, "--seed", 9, "--append", "-o", tmp_path)
    assert len(read_jsonl(tmp_path / "results.jsonl")) == 100
    run("solve", *FAST, "-o", tmp_path)
    assert len(read_jsonl(tmp_path / "results.jsonl")) == 50


def test_sweep_bad_lists(tmp_path):
    assert run("sweep", "--penalties", "", "-o", tmp_path).exit_code == 3
    assert run("sweep", "--penalties", "x", "-o", tmp_path).exit_code == 3
    assert run("sweep", "--schedules", "fast", "-o", tmp_path).exit_code == 3


def test_report_empty_results(tmp_path):
    path = tmp_path / "results.jsonl"
    path.write_text("")
    assert run("report", path, "-o", tmp_path).exit_code == 2
    assert run("report", tmp_path / "missing.jsonl", "-o", tmp_path).exit_code == 2
    assert run("report", "-o", tmp_path).exit_code == 3


def test_report_scaling(tmp_path):
    r = run("report", "--mode", "scaling", "--sizes", "3-6", "--accuracies", "1,5", "-o", tmp_path)
    assert r.exit_code == 0, r.output
    rows = list(csv.DictReader(io.StringIO((tmp_path / "scaling.csv").read_text())))
    assert len(rows) == 8
    assert [(int(r["a"]), int(r["n_nodes"])) for r in rows] == [(a, n) for a in (1, 5) for n in range(3, 7)]
    assert "fit logical_qubits" in r.output


def test_report_scaling_profile_flags(tmp_path):
    r = run("report", "--mode", "scaling", "--sizes", "3,4", "--accuracies", "1", "--qubits", 100, "-o", tmp_path)
    assert r.exit_code == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "scaling.csv").read_text())))
    assert [row["embeddable"] for row in rows] == ["0", "0"]
    assert run("report", "--mode", "scaling", "--sizes", "3-40", "-o", tmp_path).exit_code == 3


@pytest.mark.parametrize("cmd", ["generate", "solve", "sweep", "oracle", "report"])
def test_help(cmd):
    assert run(cmd, "--help").exit_code == 0
