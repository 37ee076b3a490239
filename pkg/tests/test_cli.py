import csv
import json
import subprocess
import sys

import pytest

from radnodal.cli import main

SOLITON = ["--p", "2", "--dim", "1", "--q", "4"]


def read_report(out):
    return json.loads((out / "report.json").read_text())


def test_solve_soliton(tmp_path, capsys):
    out = tmp_path / "k0"
    assert main(["solve", *SOLITON, "--k", "0", "--rmax", "40", "--grid", "4000", "--out", str(out)]) == 0
    rep = read_report(out)
    sol = rep["solution"]
    assert 0.657 <= sol["c_k"] <= 0.677
    assert rep["converged"] and sol["converged"] and sol["node_count_observed"] == 0
    assert set(sol) >= {"k", "nodes", "alphas", "c_k", "pieces", "h_certificate",
                        "node_count_observed", "converged"}
    assert set(sol["pieces"][0]) >= {"rho", "sigma", "sign", "energy", "nehari_residual",
                                     "grad_residual", "iterations"}
    assert rep["spec"] == {"p": 2.0, "dim": 1, "r_max": 40.0, "terms": [{"lambda": 1.0, "q": 4.0}]}
    with open(out / "profile.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "u"] and len(rows) == 4002
    assert (out / "profile.dat").read_text().startswith("# r u")
    assert "c_k=" in capsys.readouterr().out


def test_solve_is_deterministic(tmp_path):
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        args = ["solve", *SOLITON, "--dim", "3", "--k", "1", "--rmax", "15", "--grid", "600",
                "--seed", "3", "--out", str(out)]
        assert main(args) == 0
        rep = read_report(out)
        rep.pop("timing")
        runs.append((json.dumps(rep, sort_keys=True), (out / "profile.csv").read_bytes()))
    assert runs[0] == runs[1]


def test_solve_collapse_exit_2(tmp_path, capsys):
    out = tmp_path / "k7"
    assert main(["solve", *SOLITON, "--k", "7", "--rmax", "10", "--out", str(out)]) == 2
    assert "CollapseDetected" in capsys.readouterr().err
    rep = read_report(out)
    assert rep["error"]["type"] == "CollapseDetected" and not rep["converged"]


def test_window_violation_exit_1(tmp_path, capsys):
    code = main(["solve", "--q", "7", "--p", "2", "--dim", "3", "--k", "0", "--out", str(tmp_path)])
    assert code == 1
    err = capsys.readouterr().err
    assert "spec error" in err and "FAIL" in err


def test_usage_error_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--p", "2"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_lambda_count_checked():
    assert main(["check", *SOLITON, "--lambda", "1", "--lambda", "2"]) == 1


def test_solve_negative_lead(tmp_path):
    out = tmp_path / "neg"
    assert main(["solve", *SOLITON, "--k", "0", "--rmax", "20", "--grid", "400", "--lead", "-",
                 "--out", str(out)]) == 0
    sol = read_report(out)["solution"]
    assert sol["leading_sign"] == "-" and sol["pieces"][0]["sign"] == "-"


def test_solve_with_oracle_block(tmp_path):
    out = tmp_path / "orc"
    args = ["solve", "--p", "2", "--dim", "3", "--q", "4", "--k", "0", "--rmax", "20",
            "--grid", "2000", "--oracle", "--out", str(out)]
    assert main(args) == 0
    orc = read_report(out)["oracle"]
    assert orc["energy_rel_diff"] < 1e-2
    assert orc["a_star"] == pytest.approx(4.33738768, abs=1e-7)


def test_oracle_soliton(tmp_path, capsys):
    out = tmp_path / "orc"
    args = ["oracle", *SOLITON, "--k", "0", "--amin", "1", "--amax", "2", "--rmax", "40",
            "--tol", "1e-10", "--out", str(out)]
    assert main(args) == 0
    rep = read_report(out)
    assert rep["oracle"]["a_star"] == pytest.approx(1.414214, abs=1e-6)
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    a = [float(r["a"]) for r in rows]
    assert a == sorted(a) and len(a) == 41
    assert set(rows[0]) == {"a", "node_count", "terminal_behavior"}
    assert (out / "profile.csv").exists()


def test_oracle_empty_bracket_exit_2(tmp_path, capsys):
    out = tmp_path / "empty"
    args = ["oracle", *SOLITON, "--k", "0", "--amin", "0.1", "--amax", "0.5", "--out", str(out)]
    assert main(args) == 2
    assert "BracketInvalid" in capsys.readouterr().err
    assert (out / "sweep.csv").exists()
    assert read_report(out)["error"]["type"] == "BracketInvalid"


def test_oracle_bad_range_exit_1(tmp_path):
    assert main(["oracle", *SOLITON, "--k", "0", "--amin", "2", "--amax", "1",
                 "--out", str(tmp_path)]) == 1


def test_check_table(capsys):
    assert main(["check", "--p", "2", "--dim", "3", "--q", "3", "--q", "5"]) == 0
    out = capsys.readouterr().out
    assert "AR" in out and "mu=3" in out.replace(" ", "")
    for name in ("f1", "f2", "f3", "f4", "SQ"):
        assert name in out


def test_check_p3(capsys):
    assert main(["check", "--p", "3", "--dim", "2", "--q", "5"]) == 0
    assert "inf" in capsys.readouterr().out


def test_env_default_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("RADNODAL_OUT", str(tmp_path / "env"))
    assert main(["solve", *SOLITON, "--k", "0", "--rmax", "20", "--grid", "400"]) == 0
    assert (tmp_path / "env" / "report.json").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "radnodal", "check", *SOLITON],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 0
    assert "SQ" in proc.stdout
