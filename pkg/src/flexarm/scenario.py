"""Scenario definition, the closed-loop simulation engine, and run logging.

A scenario bundles the arm, the interface, the controller/adaptation
setup, fidelity options and a phase list (position waypoints and force
setpoints).  Phases advance on convergence with a timeout fallback; force
references are zero during position phases, which is what lets one control
law cover free motion, contact and the transitions.

The engine samples sensors at the control rate, evaluates the control law
and adaptation, then advances the plant through fixed substeps under the
held rate command.  Every control step appends one row to a fixed-schema
log and one stability certificate record.
"""

from __future__ import annotations

import gc
import time
from dataclasses import dataclass, field

import numpy as np

from .adaptation import AdaptiveState, integrate_adaptation, ke_update, theta_update
from .chain import ChainParams, JointState, jacobians
from .contact import ContactParams, projectors, stiffness_determinant
from .controller import (ControllerState, Gains, control_step,
                         integrate_controller)
from .flex import (DeflectionError, compute_Jfg, estimated_task_jacobian,
                   static_residual, theta_from)
from .lyapunov import certificate
from .plant import FidelityOptions, init_plant, measure, plant_step

S_TASK = 3
V_SLACK_REL = 1e-6
RESIDUAL_TOL = 1e-9
DET_TOL = 1e-14

LOG_COLUMNS = (
    ["t"]
    + [f"gamma_{i}" for i in range(1, 5)]
    + [f"delta_{i}" for i in range(1, 4)]
    + ["p_x", "p_y", "alpha"]
    + ["qr_x", "qr_y", "qr_alpha"]
    + ["f_true_x", "f_true_y"]
    + ["f_meas_x", "f_meas_y"]
    + ["eta_x", "eta_y"]
    + ["e_x", "e_y", "e_alpha"]
    + [f"xi_{i}" for i in range(1, 4)]
    + ["ke_hat_n", "ke_hat_t"]
    + [f"theta_hat_{i}" for i in range(1, 28)]
    + ["V", "Vdot_bound", "contact", "step_time_us"]
)
STEP_TIME_COLUMN = LOG_COLUMNS.index("step_time_us")


@dataclass
class Phase:
    """One mission phase.

    ``kind`` is "position" (target is a task waypoint (3,)) or "force"
    (target is a force setpoint (2,)).  The phase advances when its
    convergence measure drops below ``advance_tol`` (position error norm in
    m, or raw force error norm in N), or after ``timeout`` seconds.

    ``ramp`` applies to force phases: the setpoint scales in linearly over
    that many seconds, which keeps the initial transient gentle enough for
    the adaptation to track it.  The advance test only arms once the ramp
    has completed.
    """

    kind: str
    target: np.ndarray
    advance_tol: float | None = None
    timeout: float | None = None
    ramp: float = 0.0

    def __post_init__(self):
        if self.kind not in ("position", "force"):
            raise ValueError(f"unknown phase kind {self.kind!r}")
        self.target = np.asarray(self.target, dtype=float)
        expected = S_TASK if self.kind == "position" else 2
        if self.target.shape != (expected,):
            raise ValueError(
                f"{self.kind} phase target must have length {expected}")
        if self.ramp < 0.0:
            raise ValueError("ramp must be non-negative")


@dataclass
class Scenario:
    """Complete description of one simulated mission."""

    name: str
    chain: ChainParams
    contact: ContactParams
    gains: Gains
    adaptation: AdaptiveState
    gamma0: np.ndarray
    phases: list[Phase]
    duration: float = 60.0
    seed: int = 0
    fidelity: FidelityOptions = field(default_factory=FidelityOptions)
    # Enforce the per-step non-increase check on V.  Meaningful for
    # single-setpoint scenarios; waypoint switches legitimately jump V.
    certify_monotone: bool = False

    def __post_init__(self):
        self.gamma0 = np.asarray(self.gamma0, dtype=float)
        if not self.phases:
            raise ValueError("scenario needs at least one phase")
        if self.duration <= 0:
            raise ValueError("duration must be positive")


@dataclass
class RunLog:
    """Fixed-schema per-step log of one run."""

    columns: list[str]
    data: np.ndarray
    scenario_name: str
    seed: int

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def block(self, prefix: str) -> np.ndarray:
        idx = [i for i, c in enumerate(self.columns) if c.startswith(prefix)]
        return self.data[:, idx]


@dataclass
class RunResult:
    """Log, summary and certificate trail of one completed run."""

    log: RunLog
    summary: dict
    certificates: list
    phase_spans: list[dict]
    monitor_failures: list[dict]

    @property
    def ok(self) -> bool:
        return not self.monitor_failures


class _Monitors:
    """In-run invariant checks; failures are recorded, not raised."""

    def __init__(self, check_v_slack: bool):
        self.failures: list[dict] = []
        self.check_v_slack = check_v_slack
        self.v_prev: float | None = None
        self.v_slack: float | None = None

    def note(self, name, step, t, detail):
        self.failures.append(
            {"monitor": name, "step": int(step), "t": float(t),
             "detail": detail})

    def check(self, step, t, row_state, adapt, ke_pair, Ke_hat, residual_inf,
              V=None, Vdot=None):
        if not np.all(np.isfinite(row_state)):
            self.note("finite_state", step, t, "non-finite value in log row")
        if (np.any(adapt.ke_hat < adapt.ke_min - 1e-15)
                or np.any(adapt.ke_hat > adapt.ke_max + 1e-15)):
            self.note("ke_bounds", step, t,
                      f"ke_hat={adapt.ke_hat.tolist()} outside bounds")
        if residual_inf > RESIDUAL_TOL:
            self.note("static_residual", step, t,
                      f"deflection balance residual {residual_inf:.3e}")
        det_err = abs(stiffness_determinant(ke_pair[0], ke_pair[1])
                      - float(np.linalg.det(Ke_hat)))
        if det_err > DET_TOL:
            self.note("det_identity", step, t, f"det mismatch {det_err:.3e}")
        if V is not None:
            if not (np.isfinite(V) and np.isfinite(Vdot)):
                self.note("finite_state", step, t,
                          "non-finite certificate value")
            if Vdot > 0.0:
                self.note("vdot_sign", step, t,
                          f"decrease bound came out positive: {Vdot:.3e}")
            if self.check_v_slack:
                if self.v_slack is None:
                    self.v_slack = V_SLACK_REL * max(V, 1.0)
                elif V - self.v_prev > self.v_slack:
                    self.note("v_increase", step, t,
                              f"V rose by {V - self.v_prev:.3e} (slack "
                              f"{self.v_slack:.3e})")
                self.v_prev = V


def run(scenario: Scenario, seed: int | None = None,
        duration: float | None = None, fidelity: bool | None = None,
        with_certificates: bool = True) -> RunResult:
    """Simulate a scenario to completion.

    Args:
        scenario: mission description.
        seed: override the scenario seed.
        duration: override the scenario duration (s).
        fidelity: force all fidelity options on or off; None keeps the
            scenario setting.
        with_certificates: compute the per-step stability certificate
            (needed for the V columns; skip for throughput sweeps).

    Returns:
        RunResult with the fixed-schema log, a summary dict, certificates
        and any monitor failures.
    """
    params = scenario.chain
    contact = scenario.contact
    gains = scenario.gains
    opts = scenario.fidelity
    if fidelity is not None:
        opts = opts.with_fidelity(fidelity)
    seed = scenario.seed if seed is None else seed
    duration = scenario.duration if duration is None else duration

    dt = 1.0 / opts.measurement_rate
    n_sub = max(1, int(round(dt / opts.plant_dt)))
    sub_dt = dt / n_sub
    n_steps = int(round(duration * opts.measurement_rate))

    rng = np.random.default_rng(seed)
    adapt = scenario.adaptation.copy()
    plant = init_plant(params, scenario.gamma0, contact)

    theta_true = theta_from(params.k, contact.ke_normal, contact.ke_tangential)
    ke_true = contact.ke_pair

    q_meas0, _ = measure(plant, params, opts.with_fidelity(False))
    phases = scenario.phases
    phase_idx = 0
    phase_started = 0.0
    phase_spans: list[dict] = []

    def phase_refs(idx, q_r_prev):
        ph = phases[idx]
        if ph.kind == "position":
            return ph.target.copy(), np.zeros(2)
        return q_r_prev, ph.target.copy()

    q_r0, f_r0 = phase_refs(0, q_meas0)
    ctrl = ControllerState(xi=np.zeros(S_TASK), q_r=q_r0, f_r=f_r0)

    noise_free = not (opts.noise_on or opts.quantization_on)
    monitors = _Monitors(check_v_slack=(with_certificates and noise_free
                                        and scenario.certify_monotone))
    log = np.empty((n_steps, len(LOG_COLUMNS)))
    certs = []

    # Interface projectors are pose-independent; K_hat_e assembly is then
    # two scalar-matrix products per step.
    Nn, Nt = projectors(contact.n)

    # The loop allocates thousands of short-lived arrays per control step
    # (mostly in the untimed plant substeps); pause the cycle collector so
    # its pauses cannot land inside the timed control-law section.  Nothing
    # in the loop creates reference cycles.
    steps_logged = 0
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for step in range(n_steps):
            t = step * dt
            q_meas, f_meas = measure(plant, params, opts, rng)

            # Phase advance uses the raw errors under the current references.
            ph = phases[phase_idx]
            ramping = False
            if ph.kind == "force" and ph.ramp > 0.0:
                scale = min(1.0, (t - phase_started) / ph.ramp)
                ctrl.f_r = ph.target * scale
                ramping = scale < 1.0
            advanced = None
            if phase_idx + 1 < len(phases) and not ramping:
                if ph.advance_tol is not None:
                    if ph.kind == "position":
                        err = np.linalg.norm(ctrl.q_r[:2] - q_meas[:2])
                    else:
                        err = np.linalg.norm(ctrl.f_r - f_meas)
                    if err < ph.advance_tol:
                        advanced = "tol"
                if (advanced is None and ph.timeout is not None
                        and t - phase_started >= ph.timeout):
                    advanced = "timeout"
                if advanced is not None:
                    phase_spans.append({"index": phase_idx, "kind": ph.kind,
                                        "t_start": phase_started, "t_end": t,
                                        "advanced_by": advanced})
                    phase_idx += 1
                    phase_started = t
                    ctrl.q_r, ctrl.f_r = phase_refs(phase_idx, ctrl.q_r)
                    ph = phases[phase_idx]
                    if ph.kind == "force" and ph.ramp > 0.0:
                        ctrl.f_r = np.zeros(2)

            # Plant-side telemetry is known before the control law runs;
            # writing it here keeps the timed section to the controller's
            # own compute and logging.
            row = log[step]
            row[0] = t
            row[1:5] = plant.gamma
            row[5:8] = plant.delta
            row[8:10] = plant.p
            row[10] = plant.alpha
            row[14:16] = plant.f_true
            row[16:18] = f_meas

            # Thread CPU time: counts the cycles the control update actually
            # consumes, not time lost to the OS scheduling other work.
            t0 = time.thread_time_ns()
            meas_state = JointState(_measured_gamma(plant.gamma, opts),
                                    plant.delta)
            jacs = jacobians(params, meas_state)
            Jfg = compute_Jfg(jacs, contact, q_meas[:2], params.m_total,
                              params.g0)
            J_T_hat = estimated_task_jacobian(jacs, adapt.theta_hat, Jfg)
            Ke_hat = adapt.ke_hat[0] * Nn + adapt.ke_hat[1] * Nt

            e = ctrl.q_r - q_meas
            eta_raw = ctrl.f_r - f_meas
            out = control_step(ctrl, e, eta_raw, J_T_hat, jacs.Jp_gamma,
                               Ke_hat, gains)
            theta_rate = theta_update(adapt, Jfg, out.gamma_dot, e,
                                      gains.K_P, jacs.J_delta)
            ke_rates = ke_update(adapt, out.eta, jacs.Jp_gamma,
                                 out.gamma_dot, contact.n)

            row[11:14] = ctrl.q_r
            row[18:20] = eta_raw
            row[20:23] = e
            row[23:26] = ctrl.xi
            row[26:28] = adapt.ke_hat
            row[28:55] = adapt.theta_hat.ravel()

            # The integrators rebind the state arrays, so these references
            # keep the pre-update values for the certificate.
            xi_pre = ctrl.xi
            theta_pre = adapt.theta_hat
            ke_pre = adapt.ke_hat
            f_r_pre = ctrl.f_r
            integrate_controller(ctrl, out, dt)
            integrate_adaptation(adapt, theta_rate, ke_rates, dt)
            step_time_us = (time.thread_time_ns() - t0) * 1e-3

            if with_certificates:
                e_true = row[11:14] - np.array([plant.p[0], plant.p[1],
                                                plant.alpha])
                eta_true = f_r_pre - plant.f_true
                cert = certificate(xi_pre, e_true, eta_true, jacs, J_T_hat,
                                   Ke_hat, theta_true - theta_pre,
                                   ke_true - ke_pre, gains, adapt, out.sigma)
                certs.append(cert)
                row[55] = cert.V
                row[56] = cert.Vdot_bound
            else:
                row[55] = np.nan
                row[56] = np.nan
            row[57] = 1.0 if plant.contact_active else 0.0
            row[58] = step_time_us
            steps_logged = step + 1

            residual_inf = float(np.max(np.abs(
                static_residual(params, plant.gamma, plant.delta, contact,
                                active=plant.contact_active))))
            monitors.check(step, t, row[:55], adapt, row[26:28], Ke_hat,
                           residual_inf,
                           row[55] if with_certificates else None,
                           row[56] if with_certificates else None)

            for _ in range(n_sub):
                plant = plant_step(plant, out.gamma_dot, params, contact,
                                   sub_dt)
    except DeflectionError as exc:
        # Abort, flushing the partial log: the caller still gets every
        # completed step plus a monitor entry naming the failure.
        if steps_logged == 0:
            raise
        log = log[:steps_logged]
        monitors.failures.append({
            "step": steps_logged, "t": steps_logged * dt,
            "monitor": "abort", "value": float("nan"), "note": str(exc)})
        phase_spans.append({"index": phase_idx,
                            "kind": phases[phase_idx].kind,
                            "t_start": phase_started,
                            "t_end": steps_logged * dt,
                            "advanced_by": "abort"})
    else:
        phase_spans.append({"index": phase_idx,
                            "kind": phases[phase_idx].kind,
                            "t_start": phase_started, "t_end": n_steps * dt,
                            "advanced_by": "end"})
    finally:
        if gc_was_enabled:
            gc.enable()

    runlog = RunLog(list(LOG_COLUMNS), log, scenario.name, seed)
    summary = _summarise(runlog, certs, phase_spans, monitors, scenario,
                         duration, seed, plant)
    return RunResult(runlog, summary, certs, phase_spans, monitors.failures)


def _measured_gamma(gamma, opts: FidelityOptions):
    if opts.quantization_on and opts.servo_quantization > 0.0:
        quant = opts.servo_quantization
        return np.round(gamma / quant) * quant
    return gamma


def _first_below(t, series, threshold):
    idx = np.flatnonzero(series < threshold)
    return float(t[idx[0]]) if idx.size else None


def log_summary(runlog: RunLog) -> dict:
    """Summary statistics derivable from a run log alone.

    Covers final and steady-state errors, convergence times, the adaptive
    estimate ranges, compute-time percentiles, and the energy-function
    trail when the log carries certificate columns.

    Args:
        runlog: completed (possibly partial) run log.

    Returns:
        Nested dict of plain Python values, JSON-ready.
    """
    t = runlog.column("t")
    p_true = np.stack((runlog.column("p_x"), runlog.column("p_y")), axis=1)
    q_r = np.stack([runlog.column(c) for c in ("qr_x", "qr_y", "qr_alpha")],
                   axis=1)
    e_p_true = np.linalg.norm(q_r[:, :2] - p_true, axis=1)
    e_meas = np.linalg.norm(
        np.stack((runlog.column("e_x"), runlog.column("e_y")), axis=1), axis=1)
    f_true = np.stack((runlog.column("f_true_x"), runlog.column("f_true_y")),
                      axis=1)
    eta_meas = np.linalg.norm(
        np.stack((runlog.column("eta_x"), runlog.column("eta_y")), axis=1),
        axis=1)
    f_r = np.stack((runlog.column("eta_x") + runlog.column("f_meas_x"),
                    runlog.column("eta_y") + runlog.column("f_meas_y")),
                   axis=1)
    eta_true = np.linalg.norm(f_r - f_true, axis=1)
    ke = np.stack((runlog.column("ke_hat_n"), runlog.column("ke_hat_t")),
                  axis=1)
    times = runlog.column("step_time_us")

    # Steady-state errors are medians over the final two seconds: under
    # quantized feedback the loop limit-cycles inside one encoder cell, so a
    # single final sample aliases the cycle phase while the median is a
    # stable property of the cycle.
    tail = t >= t[-1] - 2.0 + 1e-9

    summary = {
        "scenario": runlog.scenario_name,
        "seed": int(runlog.seed),
        "duration_s": float(t[-1] + (t[1] - t[0] if len(t) > 1 else 0.0)),
        "steps": int(len(t)),
        "final": {
            "e_p_true_m": float(e_p_true[-1]),
            "e_p_meas_m": float(e_meas[-1]),
            "e_p_true_steady_m": float(np.median(e_p_true[tail])),
            "e_p_meas_steady_m": float(np.median(e_meas[tail])),
            "eta_true_N": float(eta_true[-1]),
            "eta_meas_N": float(eta_meas[-1]),
            "eta_true_steady_N": float(np.median(eta_true[tail])),
            "contact": bool(runlog.column("contact")[-1] > 0.5),
        },
        "convergence": {
            "pos_err_lt_1mm_s": _first_below(t, e_p_true, 1e-3),
            "eta_true_lt_0p05_s": _first_below(t, eta_true, 0.05),
            "eta_true_lt_0p02_s": _first_below(t, eta_true, 0.02),
        },
        "adaptation": {
            "ke_hat_final": ke[-1].tolist(),
            "ke_hat_min": ke.min(axis=0).tolist(),
            "ke_hat_max": ke.max(axis=0).tolist(),
            "theta_hat_max_abs": float(
                np.max(np.abs(runlog.block("theta_hat_")))),
        },
        "timing_us": {
            "p50": float(np.percentile(times, 50)),
            "p95": float(np.percentile(times, 95)),
            "p99": float(np.percentile(times, 99)),
            "max": float(times.max()),
        },
    }
    V = runlog.column("V")
    if np.all(np.isfinite(V)):
        dV = np.diff(V)
        summary["lyapunov"] = {
            "V0": float(V[0]),
            "V_final": float(V[-1]),
            "max_step_increase": float(dV.max()) if dV.size else 0.0,
            "vdot_bound_max": float(runlog.column("Vdot_bound").max()),
        }
    return summary


def _summarise(runlog: RunLog, certs, phase_spans, monitors, scenario,
               duration, seed, plant) -> dict:
    summary = log_summary(runlog)
    summary["seed"] = int(seed)
    summary["duration_s"] = float(duration)
    summary["phases"] = phase_spans
    summary["monitors"] = {"ok": not monitors.failures,
                           "failures": monitors.failures}
    if certs and "lyapunov" in summary:
        summary["lyapunov"]["svmin_J_min"] = float(
            min(c.svmin_J for c in certs))
        summary["lyapunov"]["svmin_Jp_gamma_min"] = float(
            min(c.svmin_Jp_gamma for c in certs))
    return summary
