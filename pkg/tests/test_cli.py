from __future__ import annotations

import json
import shutil
import subprocess

import pytest

from mbqclab import aklt, cli, spt


def run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = cli.main([*argv, "--output", str(out)])
    return code, json.loads(out.read_text()), out


def test_teleport_demo(tmp_path):
    code, rep, _ = run(["teleport-demo", "--xi", "0.7", "--seed", "1"], tmp_path)
    assert code == 0 and rep["passed"]
    assert rep["seed"] == 1 and rep["inputs"]["xi"] == 0.7
    assert rep["result"]["fidelity"] == pytest.approx(1)


def test_reports_byte_identical(tmp_path):
    _, _, a = run(["teleport-demo", "--xi", "0.3", "--seed", "9"], tmp_path, "a.json")
    _, _, b = run(["teleport-demo", "--xi", "0.3", "--seed", "9"], tmp_path, "b.json")
    assert a.read_bytes() == b.read_bytes()


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["bogus"])
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_exercises_report(tmp_path):
    code, rep, _ = run(["exercises"], tmp_path)
    assert code == 0
    assert len(rep["checks"]) == 19 and all(c["passed"] for c in rep["checks"])
    assert rep["result"]["exercises_covered"] == list(range(1, 17))
    assert {m["exercise"] for m in rep["result"]["mapping"]} >= {"1", "16a", "16d"}


def test_compile_then_run_pattern(tmp_path):
    code, rep, pat_file = run(["compile", "--gate", "euler", "--angles", "0.3,1.1,-0.4", "--seed", "2"], tmp_path, "p.json")
    assert code == 0 and rep["result"]["branches"] == 16
    code, rep, _ = run(["run-pattern", str(pat_file), "--outcomes", "0110"], tmp_path, "r.json")
    assert code == 0 and rep["result"]["outcomes"] == [0, 1, 1, 0]
    code, rep, _ = run(["run-pattern", str(pat_file), "--seed", "4"], tmp_path, "r2.json")
    assert code == 0


def test_run_pattern_bad_outcome_string(tmp_path, capsys):
    _, _, pat_file = run(["compile", "--gate", "teleport", "--angles", "0.2"], tmp_path, "p.json")
    assert cli.main(["run-pattern", str(pat_file), "--outcomes", "012"]) == 2
    assert "outcomes" in capsys.readouterr().err


def test_malformed_pattern_names_field(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"steps": [], "n_sites": 2, "inputs": [0], "outputs": [1]}))
    assert cli.main(["run-pattern", str(bad)]) == 2
    assert "byproduct" in capsys.readouterr().err


def test_graph_rewrite(tmp_path):
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"n": 4, "edges": [[0, 1], [1, 2], [2, 3]], "plan": [[1, "Y", 0]]}))
    code, rep, _ = run(["graph-rewrite", str(g)], tmp_path)
    assert code == 0
    assert rep["result"]["graph_state"]["edges"] == [[0, 2], [2, 3]]
    assert rep["result"]["graph_state"]["corrections"] == {"0": 1, "2": 1}


def test_graph_rewrite_missing_field(tmp_path, capsys):
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"n": 3}))
    assert cli.main(["graph-rewrite", str(g), "--plan", "0:Z:0"]) == 2
    assert "'edges'" in capsys.readouterr().err


def test_aklt_subcommand(tmp_path):
    lay = tmp_path / "lay.json"
    lay.write_text(json.dumps(aklt.hexagon_patch().to_json()))
    code, rep, _ = run(["aklt", str(lay), "--seed", "3"], tmp_path)
    assert code == 0
    assert len(rep["result"]["outcome_map"]) == 6
    assert "domain_graph" in rep["result"]["encoding"]


def test_aklt_cap_message(tmp_path, capsys):
    lay = tmp_path / "lay.json"
    lay.write_text(json.dumps(aklt.chain_layout(5).to_json()))
    assert cli.main(["aklt", str(lay), "--cap", "100"]) == 2
    assert "cap" in capsys.readouterr().err


@pytest.mark.parametrize("lattice", ["triangular-torus", "union-jack-patch", "square-torus"])
def test_spt_verify_builtin(tmp_path, lattice):
    code, rep, _ = run(["spt-verify", "--lattice", lattice], tmp_path)
    assert code == 0 and rep["checks"]


def test_spt_verify_file_z3(tmp_path):
    f = tmp_path / "hc.json"
    f.write_text(json.dumps(spt.honeycomb_torus().to_json()))
    code, rep, _ = run(["spt-verify", "--lattice-file", str(f), "--order", "3"], tmp_path)
    assert code == 0
    assert {c["name"] for c in rep["checks"]} >= {"cocycle_condition", "global_symmetry_invariance"}


def test_percolate_with_csv(tmp_path):
    csv = tmp_path / "curves.csv"
    code, rep, _ = run(
        ["percolate", "--model", "bond", "--sizes", "8,16", "--trials", "200", "--seed", "5", "--csv", str(csv)],
        tmp_path,
    )
    assert code == 0 and rep["result"]["threshold"] is not None
    assert csv.read_text().startswith("size,p,")


def test_percolate_full_grid_fails_threshold_check(tmp_path):
    code, rep, _ = run(["percolate", "--model", "site", "--sizes", "4,8", "--pgrid", "0,1", "--trials", "20"], tmp_path)
    assert code == 1 and not rep["passed"]


def test_negative_tolerance_rejected(capsys):
    assert cli.main(["exercises", "--tol", "-1"]) == 2
    assert "positive" in capsys.readouterr().err


@pytest.mark.skipif(shutil.which("mbqclab") is None, reason="console script not installed")
def test_console_script_stdout():
    proc = subprocess.run(["mbqclab", "teleport-demo", "--xi", "0.7", "--seed", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["passed"]
