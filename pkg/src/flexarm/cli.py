"""Command-line front end: simulate, check, sweep and export.

Exit code 0 means the requested runs completed with every in-run invariant
monitor green; any failure produces a nonzero exit and a machine-readable
JSON report in the output directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfg
from . import scenario as scn
from .export import (FORMATS, export as export_artifacts, read_csv,
                     write_csv, write_plots, write_summary)

DEFAULT_OUT = "runs"


def _load(source: str) -> scn.Scenario:
    """Resolve a scenario from a built-in name or a JSON config path."""
    if source in cfg.BUILTIN_SCENARIOS:
        return cfg.BUILTIN_SCENARIOS[source]()
    path = Path(source)
    if not path.exists():
        raise cfg.ConfigError(
            f"no such scenario: {source!r} is neither a file nor one of "
            f"{sorted(cfg.BUILTIN_SCENARIOS)}")
    return cfg.load_scenario(path)


def _jsonable(obj):
    """Recursively replace non-finite floats; strict parsers reject NaN."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_report(out_dir: Path, name: str, payload: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2)
        fh.write("\n")
    return path


def _fidelity_arg(value):
    return None if value is None else (value == "on")


def cmd_simulate(args) -> int:
    try:
        scenario = _load(args.config)
    except cfg.ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    result = scn.run(scenario, seed=args.seed, duration=args.duration,
                     fidelity=_fidelity_arg(args.fidelity))
    out_dir = Path(args.out)
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    written = export_artifacts(result, out_dir, formats)
    for paths in written.values():
        for p in paths:
            print(p)
    if not result.ok:
        report = _write_report(out_dir, "failure_report.json", {
            "ok": False,
            "scenario": result.log.scenario_name,
            "seed": result.log.seed,
            "failures": result.monitor_failures,
            "summary": result.summary,
        })
        print(f"monitor failures: {len(result.monitor_failures)} "
              f"(report: {report})", file=sys.stderr)
        return 1
    final = result.summary["final"]
    print(f"ok: {result.log.scenario_name} seed={result.log.seed} "
          f"steps={result.summary['steps']} "
          f"pos_err={final['e_p_true_steady_m']:.2e} m "
          f"eta={final['eta_true_steady_N']:.2e} N")
    return 0


def _check_one(name: str) -> dict:
    """Run one built-in scenario and evaluate its invariant checklist."""
    scenario = cfg.BUILTIN_SCENARIOS[name]()
    result = scn.run(scenario)
    s = result.summary
    checks = {"monitors_clean": result.ok}
    lyap = s.get("lyapunov")
    if lyap is not None:
        checks["vdot_bound_nonpositive"] = lyap["vdot_bound_max"] <= 0.0
    if scenario.certify_monotone and lyap is not None:
        slack = scn.V_SLACK_REL * max(lyap["V0"], 1.0)
        checks["v_nonincreasing"] = lyap["max_step_increase"] <= slack
    bounds_lo, bounds_hi = scenario.adaptation.ke_min, scenario.adaptation.ke_max
    ad = s["adaptation"]
    checks["ke_within_bounds"] = bool(
        all(lo - 1e-15 <= v for lo, v in zip(bounds_lo, ad["ke_hat_min"]))
        and all(v <= hi + 1e-15 for hi, v in zip(bounds_hi, ad["ke_hat_max"])))
    if name == "force":
        conv = s["convergence"]["eta_true_lt_0p02_s"]
        checks["force_converged_30s"] = conv is not None and conv <= 30.0
    if name == "mixed":
        spans = s["phases"]
        checks["mission_completed"] = (
            len(spans) == len(scenario.phases)
            and spans[-1]["advanced_by"] == "end")
        checks["force_phase_by_tolerance"] = any(
            sp["kind"] == "force" and sp["advanced_by"] == "tol"
            for sp in spans)
    if name in ("mixed", "position"):
        checks["steady_pos_err_lt_1mm"] = (
            s["final"]["e_p_true_steady_m"] < 1e-3)
    return {
        "scenario": name,
        "ok": all(checks.values()),
        "checks": checks,
        "failures": result.monitor_failures,
        "summary": s,
    }


def cmd_check(args) -> int:
    reports = [_check_one(name) for name in sorted(cfg.BUILTIN_SCENARIOS)]
    ok = all(r["ok"] for r in reports)
    payload = {"ok": ok, "scenarios": reports}
    out_dir = Path(args.out)
    path = _write_report(out_dir, "check_report.json", payload)
    for r in reports:
        status = "ok" if r["ok"] else "FAIL"
        bad = [k for k, v in r["checks"].items() if not v]
        print(f"{r['scenario']:9s} {status}"
              + (f"  failed: {', '.join(bad)}" if bad else ""))
    print(f"report: {path}")
    return 0 if ok else 1


def _sweep_task(source, seed, ke_n, ke_t, duration, fidelity):
    """One sweep cell; runs in a worker process, owns all of its state."""
    scenario = _load(source)
    if ke_n is not None or ke_t is not None:
        scenario.contact = dataclasses.replace(
            scenario.contact,
            ke_normal=scenario.contact.ke_normal if ke_n is None else ke_n,
            ke_tangential=(scenario.contact.ke_tangential
                           if ke_t is None else ke_t))
    result = scn.run(scenario, seed=seed, duration=duration,
                     fidelity=fidelity, with_certificates=False)
    s = result.summary
    return {
        "seed": seed,
        "ke_true": [scenario.contact.ke_normal,
                    scenario.contact.ke_tangential],
        "ok": result.ok,
        "n_failures": len(result.monitor_failures),
        "final": s["final"],
        "convergence": s["convergence"],
        "ke_hat_final": s["adaptation"]["ke_hat_final"],
        "ke_hat_min": s["adaptation"]["ke_hat_min"],
        "ke_hat_max": s["adaptation"]["ke_hat_max"],
    }


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_sweep(args) -> int:
    try:
        _load(args.scenario)
    except cfg.ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    ke_n_grid = _float_list(args.ke_normal) if args.ke_normal else [None]
    ke_t_grid = _float_list(args.ke_tangential) if args.ke_tangential else [None]
    seed0 = args.seed if args.seed is not None else 0
    tasks = [(args.scenario, seed, ke_n, ke_t, args.duration,
              _fidelity_arg(args.fidelity))
             for seed in range(seed0, seed0 + args.seeds)
             for ke_n in ke_n_grid
             for ke_t in ke_t_grid]
    # Each worker owns its plant/controller/log; the pool only moves plain
    # argument tuples in and summary dicts out.
    if args.workers == 1:
        results = [_sweep_task(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_task, *zip(*tasks)))
    n_ok = sum(r["ok"] for r in results)
    payload = {
        "ok": n_ok == len(results),
        "scenario": args.scenario,
        "runs": len(results),
        "runs_ok": n_ok,
        "seeds": args.seeds,
        "ke_normal_grid": ke_n_grid if ke_n_grid != [None] else "default",
        "ke_tangential_grid": (ke_t_grid if ke_t_grid != [None]
                               else "default"),
        "results": results,
    }
    path = _write_report(Path(args.out), "sweep_report.json", payload)
    print(f"{n_ok}/{len(results)} runs clean  (report: {path})")
    return 0 if payload["ok"] else 1


def cmd_export(args) -> int:
    try:
        log = read_csv(args.log)
    except (OSError, ValueError) as err:
        print(f"export error: {err}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    unknown = set(formats) - set(FORMATS)
    if unknown:
        print(f"export error: unknown formats {sorted(unknown)}",
              file=sys.stderr)
        return 2
    written = []
    if "csv" in formats:
        written.append(write_csv(log, out_dir / f"{log.scenario_name}.csv"))
    if "summary" in formats:
        written.append(write_summary(
            scn.log_summary(log), out_dir / f"{log.scenario_name}_summary.json"))
    if "svg-plots" in formats:
        written.extend(write_plots(log, out_dir))
    for p in written:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flexarm",
        description="Adaptive force/motion control simulation for a planar "
                    "flexible-joint arm")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        p.add_argument("--duration", type=float, default=None,
                       help="override the run duration in seconds")
        p.add_argument("--fidelity", choices=("on", "off"), default=None,
                       help="force all sensor fidelity options on or off")
        p.add_argument("--out", default=DEFAULT_OUT,
                       help="output directory (default: %(default)s)")

    p = sub.add_parser("simulate", help="run one scenario and export artifacts")
    p.add_argument("config",
                   help="JSON config path or built-in scenario name "
                        f"({', '.join(sorted(cfg.BUILTIN_SCENARIOS))})")
    common(p)
    p.add_argument("--formats", default=",".join(FORMATS),
                   help="comma-separated artifact set (default: all)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check",
                       help="run the invariant suite on the built-in scenarios")
    p.add_argument("--out", default=DEFAULT_OUT,
                   help="output directory (default: %(default)s)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="seed/stiffness batch on a worker pool")
    p.add_argument("--scenario", default=cfg.DEFAULT_SCENARIO,
                   help="built-in name or config path (default: %(default)s)")
    p.add_argument("--seeds", type=int, default=20,
                   help="number of seeds, 0..N-1 (default: %(default)s)")
    p.add_argument("--ke-normal", default=None,
                   help="comma-separated true normal moduli grid [N/m]")
    p.add_argument("--ke-tangential", default=None,
                   help="comma-separated true tangential moduli grid [N/m]")
    p.add_argument("--workers", type=int, default=None,
                   help="pool size (default: one per core)")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="re-derive artifacts from a run CSV")
    p.add_argument("log", help="CSV file produced by simulate")
    p.add_argument("--out", default=DEFAULT_OUT,
                   help="output directory (default: %(default)s)")
    p.add_argument("--formats", default="summary,svg-plots",
                   help="comma-separated artifact set (default: %(default)s)")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
