"""Artifact export: CSV round-trips, digests, plots, format selection."""

import json

import numpy as np
import pytest

from flexarm.config import BUILTIN_SCENARIOS
from flexarm.export import (FORMATS, export, read_csv, runlog_digest,
                            write_csv, write_plots, write_summary)
from flexarm.scenario import LOG_COLUMNS, RunLog, run


@pytest.fixture(scope="module")
def result():
    return run(BUILTIN_SCENARIOS["mixed"](), duration=1.0)


def test_csv_round_trip_bitwise(result, tmp_path):
    path = write_csv(result.log, tmp_path / "run.csv")
    back = read_csv(path)
    assert back.columns == list(LOG_COLUMNS)
    np.testing.assert_array_equal(back.data, result.log.data)
    assert back.scenario_name == "run"
    assert back.seed == -1


def test_csv_header_guard(result, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="schema"):
        read_csv(path)
    empty = tmp_path / "hdr.csv"
    empty.write_text(",".join(LOG_COLUMNS) + "\n")
    with pytest.raises(ValueError, match="no records"):
        read_csv(empty)


def test_digest_ignores_step_times(result):
    base = runlog_digest(result.log)
    jittered = RunLog(list(result.log.columns), result.log.data.copy(),
                      result.log.scenario_name, result.log.seed)
    col = jittered.columns.index("step_time_us")
    jittered.data[:, col] += 13.7
    assert runlog_digest(jittered) == base
    assert runlog_digest(jittered, include_timing=True) != runlog_digest(
        result.log, include_timing=True)


def test_digest_sensitive_to_payload(result):
    tweaked = RunLog(list(result.log.columns), result.log.data.copy(),
                     result.log.scenario_name, result.log.seed)
    tweaked.data[0, tweaked.columns.index("p_x")] += 1e-15
    assert runlog_digest(tweaked) != runlog_digest(result.log)


def test_plots_written(result, tmp_path):
    paths = write_plots(result.log, tmp_path / "plots", result.phase_spans)
    assert [p.name for p in paths] == ["force_adaptation.svg",
                                       "pose_tracking.svg", "theta_hat.svg"]
    for p in paths:
        text = p.read_text()
        assert p.stat().st_size > 1000
        assert "<svg" in text


def test_empty_log_refused(tmp_path):
    empty = RunLog(list(LOG_COLUMNS), np.empty((0, len(LOG_COLUMNS))),
                   "void", 0)
    with pytest.raises(ValueError):
        write_csv(empty, tmp_path / "void.csv")
    with pytest.raises(ValueError):
        write_plots(empty, tmp_path)


def test_export_format_selection(result, tmp_path):
    written = export(result, tmp_path / "all")
    assert set(written) == set(FORMATS)
    assert written["csv"][0].name == "mixed.csv"
    assert written["summary"][0].name == "mixed_summary.json"
    assert len(written["svg-plots"]) == 3

    only_csv = export(result, tmp_path / "csv_only", formats=("csv",))
    assert set(only_csv) == {"csv"}
    assert not (tmp_path / "csv_only" / "mixed_summary.json").exists()

    with pytest.raises(ValueError, match="unknown export formats"):
        export(result, tmp_path / "nope", formats=("csv", "pickle"))


def test_summary_json_round_trip(result, tmp_path):
    path = write_summary(result.summary, tmp_path / "summary.json")
    back = json.loads(path.read_text())
    assert back["scenario"] == "mixed"
    assert back["final"] == pytest.approx(result.summary["final"])
