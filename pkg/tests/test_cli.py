import csv
import hashlib
import io
import json

import pytest

from poisson_noma.cli import main

GRID = ["--dtheta", "4", "--dp", "0.1"]


def rows_of(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_version_and_help(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out


def test_usage_error_is_config_exit():
    with pytest.raises(SystemExit) as exc:
        main(["coverage", "--no-such-flag"])
    assert exc.value.code == 3


def test_coverage_default_sweep_shape(tmp_path):
    out = tmp_path / "cov.csv"
    assert main(["coverage", "--mc-trials", "0", "-o", str(out)]) == 0
    rows = rows_of(out)
    assert len(rows) == 198
    assert {r["ordering"] for r in rows} == {"msp", "isinr"}
    assert all(r["mc_mean"] == "" for r in rows)
    assert all(0 <= float(r["analytical"]) <= 1 for r in rows)


def test_coverage_single_threshold_single_ue(tmp_path):
    out = tmp_path / "one.csv"
    assert main(["coverage", "--n-ues", "1", "--theta-db", "0", "--mc-trials", "200", "-o", str(out)]) == 0
    rows = rows_of(out)
    assert len(rows) == 2
    assert all(r["mc_mean"] != "" for r in rows)


def test_coverage_json_schema(tmp_path):
    out = tmp_path / "cov.json"
    assert main(["coverage", "--theta-db", "0,5", "--orderings", "msp", "--format", "json", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "poisson_noma.coverage/1"
    assert len(doc["powers"]) == 3 and sum(doc["powers"]) == pytest.approx(1)
    assert set(doc["rows"][0]) == {"theta_db", "rank", "ordering", "analytical", "mc_mean", "mc_stderr"}


def test_negative_threshold_range(tmp_path):
    out = tmp_path / "neg.csv"
    assert main(["coverage", "--theta-db=-10:0:5", "--orderings", "msp", "-o", str(out)]) == 0
    assert sorted({float(r["theta_db"]) for r in rows_of(out)}) == [-10, -5, 0]


def test_rate_region_rows(tmp_path):
    out = tmp_path / "rr.csv"
    assert main(["rate-region", "--dp", "0.5", "-o", str(out)]) == 0
    rows = rows_of(out)
    assert [float(r["p1"]) for r in rows] == [0.0, 0.5, 1.0]
    out2 = tmp_path / "rt.csv"
    assert main(["rate-region", "--dp", "0.5", "--access", "tdma", "-o", str(out2)]) == 0
    assert "t1" in rows_of(out2)[0]


def test_allocate_feasible_and_manifest(tmp_path):
    out = tmp_path / "a.json"
    assert main(["allocate", "--n-ues", "1", "--tmt", "0", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["solution"]["evaluations"] == 33
    assert doc["solution"]["powers"] == [1.0]
    man = json.loads((tmp_path / "a.json.manifest.json").read_text())
    assert man["schema"] == "poisson_noma.manifest/1"
    assert man["command"] == "allocate"
    assert man["output_sha256"] == hashlib.sha256(out.read_bytes()).hexdigest()


def test_allocate_infeasible_exit(tmp_path, capsys):
    out = tmp_path / "inf.json"
    assert main(["allocate", "--n-ues", "3", "--tmt", "5", *GRID, "-o", str(out)]) == 2
    doc = json.loads(out.read_text())
    assert doc["solution"]["feasible"] is False
    assert doc["solution"]["failed_rank"] == 3
    assert doc["solution"]["powers"] is None
    assert "infeasible" in capsys.readouterr().err


def test_allocate_requires_target():
    assert main(["allocate", "--problem", "tmt"]) == 3


def test_symmetric_allocation(tmp_path):
    out = tmp_path / "s.json"
    assert main(["allocate", "--problem", "symmetric", *GRID, "-o", str(out)]) == 0
    sol = json.loads(out.read_text())["solution"]
    assert min(sol["per_ue_throughput"]) >= sol["symmetric_level"]


def test_bad_config_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "lambda": 10,\n  "eta": ,\n}\n')
    assert main(["coverage", "--config", str(cfg)]) == 3
    err = capsys.readouterr().err
    assert "line 3" in err


@pytest.mark.parametrize("argv", [
    ["coverage", "--lambda", "-1"],
    ["coverage", "--powers", "0.5,0.6,0.1"],
    ["coverage", "--model", "sector"],
    ["allocate", "--tmt", "0.1", "--dp", "0.03"],
])
def test_invalid_values_are_config_errors(argv, tmp_path):
    assert main([*argv, "-o", str(tmp_path / "x")]) == 3


def test_sweep_axes(tmp_path):
    out = tmp_path / "n.csv"
    assert main(["sweep", "--axis", "n", "--n-range", "1:3", "--tmt", "0.3", *GRID, "-o", str(out)]) == 0
    assert [int(r["n"]) for r in rows_of(out)] == [1, 2, 3]
    out = tmp_path / "b.csv"
    assert main(["sweep", "--axis", "beta", "--betas", "0,0.5", "--tmt", "0.3", *GRID, "-o", str(out)]) == 0
    assert [float(r["beta"]) for r in rows_of(out)] == [0.0, 0.5]
    assert main(["sweep", "--tmt", "0.3"]) == 3


def test_simulate_modes(tmp_path):
    out = tmp_path / "st.json"
    assert main(["simulate", "--stienen", "--n-trials", "200", "--seed", "3", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "poisson_noma.stienen/1" and 0 < doc["served_fraction"] < 1
    out = tmp_path / "dump.json"
    assert main(["simulate", "--dump", "2", "--seed", "3", "-o", str(out)]) == 0
    assert len(json.loads(out.read_text())["realizations"]) == 2
    out = tmp_path / "mc.csv"
    assert main(["simulate", "--n-trials", "300", "--theta-db", "0", "-o", str(out)]) == 0
    assert len(rows_of(out)) == 3


def test_threads_do_not_change_output(tmp_path, monkeypatch):
    argv = ["simulate", "--n-trials", "2500", "--theta-db", "0,5", "--seed", "11"]
    a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
    assert main([*argv, "-o", str(a)]) == 0
    assert main([*argv, "--threads", "3", "-o", str(b)]) == 0
    monkeypatch.setenv("POISSON_NOMA_THREADS", "2")
    assert main([*argv, "-o", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_bad_thread_env_is_config_error(monkeypatch, tmp_path):
    monkeypatch.setenv("POISSON_NOMA_THREADS", "zero")
    assert main(["simulate", "--dump", "1", "-o", str(tmp_path / "x")]) == 3


def test_replay_from_manifest(tmp_path):
    first = tmp_path / "r.csv"
    assert main(["rate-region", "--dp", "0.25", "--beta", "0.1", "-o", str(first)]) == 0
    again = tmp_path / "r2.csv"
    assert main(["rate-region", "--from-manifest", str(first) + ".manifest.json", "-o", str(again)]) == 0
    assert first.read_bytes() == again.read_bytes()
    assert main(["rate-region", "--from-manifest", str(tmp_path / "missing.json")]) == 3


def test_allocate_with_simulated_throughput(tmp_path):
    out = tmp_path / "mc.json"
    argv = ["allocate", "--tmt", "0.3", *GRID, "--mc-trials", "3000", "--seed", "4", "-o", str(out)]
    assert main(argv) == 0
    sol = json.loads(out.read_text())["solution"]
    assert min(sol["per_ue_throughput"]) >= 0.3
    again = tmp_path / "mc2.json"
    assert main(["allocate", "--from-manifest", str(out) + ".manifest.json", "-o", str(again)]) == 0
    assert out.read_bytes() == again.read_bytes()
    assert main(["allocate", "--tmt", "0.3", "--mc-trials", "-1"]) == 3
