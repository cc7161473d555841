"""Run artifact export: CSV logs, JSON summaries and SVG plot panels.

CSV files carry the fixed log schema verbatim (header equals the column
list, RFC-4180 quoting, one row per control step).  The digest helper
hashes everything except the step-time column, which is the only
non-deterministic column of a seeded run.  Plots are three static panels:
force tracking with the adaptive contact moduli, Cartesian pose against
its references, and the flexibility parameter estimates.
"""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from pathlib import Path

import numpy as np

from .scenario import LOG_COLUMNS, RunLog, RunResult

FORMATS = ("csv", "summary", "svg-plots")


def read_csv(path) -> RunLog:
    """Load a previously exported run log.

    The header must match the run-log schema exactly.  The scenario name
    is recovered from the file stem; the seed is not stored in the CSV and
    comes back as -1.

    Args:
        path: CSV file written by :func:`write_csv`.

    Returns:
        RunLog with the parsed data.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
        if header != list(LOG_COLUMNS):
            raise ValueError(
                f"{path} does not carry the run-log schema "
                f"(got {len(header)} columns, expected {len(LOG_COLUMNS)})")
        with warnings.catch_warnings():
            # An empty body is reported explicitly below.
            warnings.simplefilter("ignore", UserWarning)
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[0] == 0:
        raise ValueError(f"{path} contains no records")
    return RunLog(list(LOG_COLUMNS), data, path.stem, -1)


def _fmt(x: float) -> str:
    """Shortest round-trip decimal form; integers stay compact."""
    return repr(float(x))


def write_csv(log: RunLog, path) -> Path:
    """Write the run log as CSV with the schema header.

    Args:
        log: run log to serialize.
        path: output file path.

    Returns:
        The written path.
    """
    if log.data.shape[0] == 0:
        raise ValueError("refusing to export an empty run log")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(log.columns)
        for row in log.data:
            writer.writerow([_fmt(x) for x in row])
    return path


def runlog_digest(log: RunLog, include_timing: bool = False) -> str:
    """SHA-256 of the log's CSV form.

    Args:
        log: run log to hash.
        include_timing: keep the per-step compute-time column.  Off by
            default: it is the one column that legitimately differs
            between two otherwise identical seeded runs.

    Returns:
        Hex digest string.
    """
    cols = list(range(len(log.columns)))
    if not include_timing:
        cols.remove(log.columns.index("step_time_us"))
    h = hashlib.sha256()
    h.update(",".join(log.columns[c] for c in cols).encode())
    for row in log.data:
        h.update(b"\n")
        h.update(",".join(_fmt(row[c]) for c in cols).encode())
    return h.hexdigest()


def write_summary(summary: dict, path) -> Path:
    """Write the run summary as indented JSON."""
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return path


def _phase_shading(ax, phase_spans):
    for span in phase_spans or []:
        if span.get("kind") == "force":
            ax.axvspan(span["t_start"], span["t_end"], color="0.92", zorder=0)


def write_plots(log: RunLog, out_dir, phase_spans=None) -> list[Path]:
    """Render the three run panels as SVG files.

    Args:
        log: run log to plot.
        out_dir: target directory (created if absent).
        phase_spans: optional phase list; force phases are shaded.

    Returns:
        List of written paths: force/adaptation panel, pose panel,
        parameter estimate panel.
    """
    if log.data.shape[0] == 0:
        raise ValueError("refusing to plot an empty run log")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = log.column("t")
    written = []

    # Panel 1: measured interface force against its setpoint, and the
    # adaptive contact moduli underneath.
    fig, (ax_f, ax_k) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    f_r_x = log.column("eta_x") + log.column("f_meas_x")
    f_r_y = log.column("eta_y") + log.column("f_meas_y")
    ax_f.plot(t, log.column("f_true_x"), label="f_x", lw=1.0)
    ax_f.plot(t, log.column("f_true_y"), label="f_y", lw=1.0)
    ax_f.plot(t, f_r_x, "k--", lw=0.8, label="setpoint")
    ax_f.plot(t, f_r_y, "k--", lw=0.8)
    ax_f.set_ylabel("interface force [N]")
    ax_f.legend(loc="best", fontsize=8)
    _phase_shading(ax_f, phase_spans)
    ax_k.plot(t, log.column("ke_hat_n"), label="normal", lw=1.0)
    ax_k.plot(t, log.column("ke_hat_t"), label="tangential", lw=1.0)
    ax_k.set_ylabel("moduli estimate")
    ax_k.set_xlabel("t [s]")
    ax_k.legend(loc="best", fontsize=8)
    _phase_shading(ax_k, phase_spans)
    fig.tight_layout()
    p = out_dir / "force_adaptation.svg"
    fig.savefig(p)
    plt.close(fig)
    written.append(p)

    # Panel 2: Cartesian pose and orientation against their references.
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 6))
    for ax, meas, ref, label in zip(
            axes,
            ("p_x", "p_y", "alpha"),
            ("qr_x", "qr_y", "qr_alpha"),
            ("x [m]", "y [m]", "alpha [rad]")):
        ax.plot(t, log.column(meas), lw=1.0, label="plant")
        ax.plot(t, log.column(ref), "k--", lw=0.8, label="reference")
        ax.set_ylabel(label)
        _phase_shading(ax, phase_spans)
    axes[0].legend(loc="best", fontsize=8)
    axes[-1].set_xlabel("t [s]")
    fig.tight_layout()
    p = out_dir / "pose_tracking.svg"
    fig.savefig(p)
    plt.close(fig)
    written.append(p)

    # Panel 3: all flexibility-parameter estimates, colored by block.
    fig, ax = plt.subplots(figsize=(7, 4))
    theta = log.block("theta_hat_")
    n_per_block = theta.shape[1] // 3
    colors = ("C0", "C1", "C2")
    labels = ("normal block", "tangential block", "gravity block")
    for i in range(theta.shape[1]):
        block = i // n_per_block
        ax.plot(t, theta[:, i], color=colors[block], lw=0.7,
                label=labels[block] if i % n_per_block == 0 else None)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("parameter estimates")
    ax.legend(loc="best", fontsize=8)
    _phase_shading(ax, phase_spans)
    fig.tight_layout()
    p = out_dir / "theta_hat.svg"
    fig.savefig(p)
    plt.close(fig)
    written.append(p)

    return written


def export(result: RunResult, out_dir, formats=FORMATS) -> dict:
    """Write the requested artifact set for one run.

    Args:
        result: completed run.
        out_dir: target directory (created if absent).
        formats: subset of {"csv", "summary", "svg-plots"}.

    Returns:
        Mapping from format name to list of written paths.
    """
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown export formats: {sorted(unknown)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = result.log.scenario_name
    written: dict[str, list] = {}
    if "csv" in formats:
        written["csv"] = [write_csv(result.log, out_dir / f"{name}.csv")]
    if "summary" in formats:
        written["summary"] = [
            write_summary(result.summary, out_dir / f"{name}_summary.json")]
    if "svg-plots" in formats:
        written["svg-plots"] = write_plots(result.log, out_dir,
                                           result.phase_spans)
    return written
