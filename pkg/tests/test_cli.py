"""Command-line front end, driven in-process through main(argv)."""

import dataclasses
import json

import numpy as np
import pytest

from flexarm import cli
from flexarm import config as cfg
from flexarm.export import read_csv
from flexarm.scenario import LOG_COLUMNS


def run_cli(*argv):
    return cli.main(list(argv))


def test_simulate_builtin_ok(tmp_path, capsys):
    code = run_cli("simulate", "force", "--duration", "2",
                   "--out", str(tmp_path))
    assert code == 0
    out = capsys.readouterr().out
    assert "ok: force" in out
    csv_path = tmp_path / "force.csv"
    assert csv_path.exists()
    assert (tmp_path / "force_summary.json").exists()
    assert (tmp_path / "force_adaptation.svg").exists()
    log = read_csv(csv_path)
    assert log.data.shape == (80, len(LOG_COLUMNS))
    summary = json.loads((tmp_path / "force_summary.json").read_text())
    assert summary["monitors"]["ok"] is True


def test_simulate_config_file_and_overrides(tmp_path):
    config = tmp_path / "short.json"
    config.write_text(json.dumps({"scenario": "position", "duration": 1.0}))
    code = run_cli("simulate", str(config), "--seed", "3",
                   "--formats", "csv,summary", "--out", str(tmp_path))
    assert code == 0
    name = "position"
    summary = json.loads((tmp_path / f"{name}_summary.json").read_text())
    assert summary["seed"] == 3
    assert summary["steps"] == 40
    assert not list(tmp_path.glob("*.svg"))


def test_simulate_unknown_scenario_exits_2(tmp_path, capsys):
    code = run_cli("simulate", "warp", "--out", str(tmp_path))
    assert code == 2
    err = capsys.readouterr().err
    assert "config error" in err and "warp" in err


def test_simulate_invalid_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"duration": -1}')
    code = run_cli("simulate", str(bad), "--out", str(tmp_path))
    assert code == 2
    assert "duration" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_simulate_unstable_run_exits_1(tmp_path, capsys):
    config = tmp_path / "unstable.json"
    config.write_text(json.dumps({
        "scenario": "force",
        "duration": 2.0,
        "gains": {"K_gamma": [5e4, 5e4, 5e4, 5e4]},
    }))
    with np.errstate(all="ignore"):
        code = run_cli("simulate", str(config), "--out", str(tmp_path))
    assert code == 1
    assert "monitor failures" in capsys.readouterr().err
    report = json.loads((tmp_path / "failure_report.json").read_text())
    assert report["ok"] is False
    assert report["failures"]
    # Strict JSON: non-finite floats must have been nulled, not emitted.
    raw = (tmp_path / "failure_report.json").read_text()
    assert "NaN" not in raw and "Infinity" not in raw


def test_check_reports_all_builtins(tmp_path, capsys, monkeypatch):
    # Shorten every preset so the checklist wiring can be exercised without
    # three full missions; an incomplete mission may legitimately fail its
    # checks here, so only the report structure is asserted.
    for name, build in list(cfg.BUILTIN_SCENARIOS.items()):
        monkeypatch.setitem(
            cfg.BUILTIN_SCENARIOS, name,
            lambda build=build: dataclasses.replace(build(), duration=2.0))
    code = run_cli("check", "--out", str(tmp_path))
    assert code in (0, 1)
    report = json.loads((tmp_path / "check_report.json").read_text())
    assert [r["scenario"] for r in report["scenarios"]] == [
        "force", "mixed", "position"]
    for r in report["scenarios"]:
        assert "monitors_clean" in r["checks"]
        assert "ke_within_bounds" in r["checks"]
    assert report["ok"] == all(r["ok"] for r in report["scenarios"])
    out = capsys.readouterr().out
    assert "force" in out and "report:" in out


def test_sweep_grid(tmp_path):
    code = run_cli("sweep", "--scenario", "force", "--seeds", "1",
                   "--duration", "1", "--workers", "1",
                   "--ke-normal", "80,120", "--out", str(tmp_path))
    assert code == 0
    report = json.loads((tmp_path / "sweep_report.json").read_text())
    assert report["runs"] == 2
    assert report["runs_ok"] == 2
    assert report["ke_normal_grid"] == [80.0, 120.0]
    assert sorted(r["ke_true"][0] for r in report["results"]) == [80.0, 120.0]
    for r in report["results"]:
        lo, hi = 0.0040, 0.0120
        assert lo <= min(r["ke_hat_min"]) and max(r["ke_hat_max"]) <= hi


def test_sweep_worker_pool(tmp_path):
    code = run_cli("sweep", "--scenario", "force", "--seeds", "2",
                   "--duration", "1", "--out", str(tmp_path))
    assert code == 0
    report = json.loads((tmp_path / "sweep_report.json").read_text())
    assert report["runs"] == 2 and report["ok"]


def test_export_rederives_artifacts(tmp_path, capsys):
    run_cli("simulate", "force", "--duration", "1", "--formats", "csv",
            "--out", str(tmp_path))
    capsys.readouterr()
    out2 = tmp_path / "derived"
    code = run_cli("export", str(tmp_path / "force.csv"), "--out", str(out2))
    assert code == 0
    assert (out2 / "force_summary.json").exists()
    assert len(list(out2.glob("*.svg"))) == 3
    summary = json.loads((out2 / "force_summary.json").read_text())
    assert summary["steps"] == 40


def test_export_bad_inputs_exit_2(tmp_path, capsys):
    assert run_cli("export", str(tmp_path / "missing.csv"),
                   "--out", str(tmp_path)) == 2
    assert "export error" in capsys.readouterr().err

    bogus = tmp_path / "bogus.csv"
    bogus.write_text("a,b\n1,2\n")
    assert run_cli("export", str(bogus), "--out", str(tmp_path)) == 2

    run_cli("simulate", "force", "--duration", "1", "--formats", "csv",
            "--out", str(tmp_path))
    capsys.readouterr()
    assert run_cli("export", str(tmp_path / "force.csv"),
                   "--formats", "parquet", "--out", str(tmp_path)) == 2
    assert "unknown formats" in capsys.readouterr().err
