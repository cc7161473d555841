"""Scenario configuration: built-in benchmark missions and JSON ingestion.

A config file is a JSON object.  Every key is optional; an empty file (or
``{}``) yields the default mixed benchmark mission.  ``"scenario"`` selects
the built-in base ("mixed", "force" or "position"); all other keys override
fields of that base, section by section.

Schema (defaults come from the selected base)::

    {
      "scenario": "mixed",
      "name": "...", "seed": 0, "duration": 60.0,
      "certify_monotone": false,
      "gamma0": [g1, g2, g3, g4],            # rad
      "chain": {                              # bench-sheet units (cm, g)
        "l_cm": 4.8, "L_cm": 6.2,             # scalars broadcast per pair
        "l_cg_cm": 2.4, "L_cg_cm": 3.6,
        "m_g": 25.0, "M_g": 64.0,
        "k_nm_rad": 0.8,
        "l_ee_cm": 12.0, "l_cg_ee_cm": 6.0, "m_ee_g": 72.0,
        "gravity": [0.0, 0.0]
      },
      "contact": {"ke_normal": 100.0, "ke_tangential": 50.0,
                  "normal": [0.0, -1.0], "anchor": [0.15, 0.26]},
      "gains": {"K_P": [...], "K_I": [...], "K_xi": [...],   # scalar or 3
                "K_gamma": [...], "K_eta": [...],            # scalar or 4
                "K_gamma_eta": null,        # null -> K_gamma + K_eta
                "sigma_p": 0.3, "eta_t": 0.1},
      "adaptation": {"gamma_theta": [6 or 9 values], "gamma_ke": [2],
                     "ke_min": 0.004, "ke_max": 0.012, "beta": 0.4,
                     "ke_hat0": null,       # null -> mid-range
                     "theta_hat0": null},   # 27 values row-major, or null
      "fidelity": {"quantization_on": true, "noise_on": true,
                   "servo_quantization": 0.0052, "force_noise_std": 0.02,
                   "plant_dt": 0.001, "measurement_rate": 40.0},
      "phases": [{"kind": "position", "target": [x, y, alpha],
                  "advance_tol": 0.002, "timeout": 20.0},
                 {"kind": "force", "target": [fx, fy],
                  "advance_tol": 0.05, "timeout": 25.0, "ramp": 3.0}]
    }

Chain lengths/masses may instead be given in SI with the ``_m`` / ``_kg``
key variants (``l_m``, ``m_kg``, ...); serialized configs use those so that
a load -> save -> load round trip is exact.  ``phases`` replaces the whole
list, it is not merged per entry.

Validation collects every problem before failing, so a bad file reports all
offending fields at once.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import defaults
from .adaptation import AdaptiveState
from .chain import ChainParams
from .contact import ContactParams
from .controller import Gains
from .flex import theta_from
from .plant import FidelityOptions
from .scenario import Phase, Scenario

# The bench lies flat, so in-plane gravity is zero for the benchmark
# missions; the library default (vertical plane) stays available for
# configs that set chain.gravity.
BENCH_GRAVITY = (0.0, 0.0)

# Interface used by the benchmark missions: horizontal surface overhead at
# y = 0.26 m, pressed from below, anchored at x = 0.15 m.
CONTACT_ANCHOR = (0.15, 0.26)
CONTACT_NORMAL = (0.0, -1.0)
KE_TRUE = (100.0, 50.0)  # N/m, true interface moduli

# Mission start configurations (inverse-kinematics solutions against the
# benchmark chain, task residual < 1e-12).  The force mission starts in
# light touch at the interface; the mixed mission starts in free space
# below it.
GAMMA0_FORCE = (2.4668483904431553, -1.2009257827554434,
                -1.161760221649789, 0.6169103930537735)
GAMMA0_MIXED = (2.3143231080342272, -1.930503468042741,
                -0.8378327900435141, 1.254013150052022)

WAYPOINT_APPROACH = (0.15, 0.255, 0.7)   # just below the interface
WAYPOINT_RETREAT = (0.15, 0.21, 0.7)     # straight pull-off, 5 cm down
WAYPOINT_PARK = (0.19, 0.17, 0.8)
FORCE_SETPOINT = (-1.0, 1.5)             # N, held force benchmark
FORCE_SETPOINT_MIXED = (0.0, 2.0)        # N, pure normal press


def _benchmark_contact() -> ContactParams:
    return ContactParams(KE_TRUE[0], KE_TRUE[1], n=CONTACT_NORMAL,
                         p_s=CONTACT_ANCHOR)


def force_scenario() -> Scenario:
    """Held-force benchmark: regulate f_r = (-1, 1.5) N from light touch.

    Noise-free and single-setpoint, so the run doubles as the Lyapunov
    certificate check: V must not increase step to step.  The setpoint
    ramps in over 4 s to keep the initial transient inside what the
    frozen-regressor adaptation can track; the deadband is disabled so the
    force error converges all the way down.
    """
    chain = defaults.benchmark_chain(g0=BENCH_GRAVITY)
    return Scenario(
        name="force",
        chain=chain,
        contact=_benchmark_contact(),
        gains=defaults.benchmark_gains(eta_t=0.0),
        adaptation=defaults.benchmark_adaptation(chain),
        gamma0=np.array(GAMMA0_FORCE),
        phases=[Phase("force", FORCE_SETPOINT, ramp=4.0)],
        duration=60.0,
        seed=0,
        fidelity=FidelityOptions.all_off(),
        certify_monotone=True,
    )


def mixed_scenario() -> Scenario:
    """Inspection mission: approach, press at f_r = (0, 2) N, retreat, park.

    Runs with full measurement fidelity (servo quantization + force noise)
    and the standard deadband, exercising the position/force transitions in
    both directions with one controller configuration.
    """
    chain = defaults.benchmark_chain(g0=BENCH_GRAVITY)
    return Scenario(
        name="mixed",
        chain=chain,
        contact=_benchmark_contact(),
        gains=defaults.benchmark_gains(),
        adaptation=defaults.benchmark_adaptation(chain),
        gamma0=np.array(GAMMA0_MIXED),
        phases=[
            Phase("position", WAYPOINT_APPROACH, advance_tol=0.002,
                  timeout=20.0),
            Phase("force", FORCE_SETPOINT_MIXED, advance_tol=0.05,
                  timeout=25.0, ramp=3.0),
            Phase("position", WAYPOINT_RETREAT, advance_tol=0.002,
                  timeout=10.0),
            Phase("position", WAYPOINT_PARK),
        ],
        duration=60.0,
        seed=0,
        fidelity=FidelityOptions(),
    )


def position_scenario() -> Scenario:
    """Free-space waypoint mission; the interface is configured but never
    touched, so the force channel stays deadbanded throughout."""
    chain = defaults.benchmark_chain(g0=BENCH_GRAVITY)
    return Scenario(
        name="position",
        chain=chain,
        contact=_benchmark_contact(),
        gains=defaults.benchmark_gains(),
        adaptation=defaults.benchmark_adaptation(chain),
        gamma0=np.array(GAMMA0_MIXED),
        phases=[
            Phase("position", WAYPOINT_RETREAT, advance_tol=0.0015,
                  timeout=15.0),
            Phase("position", WAYPOINT_PARK),
        ],
        duration=30.0,
        seed=0,
        fidelity=FidelityOptions.all_off(),
    )


BUILTIN_SCENARIOS = {
    "force": force_scenario,
    "mixed": mixed_scenario,
    "position": position_scenario,
}
DEFAULT_SCENARIO = "mixed"


class ConfigError(ValueError):
    """Config parse or validation failure; lists every problem found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        lines = "\n".join(f"  - {p}" for p in self.problems)
        super().__init__(f"invalid scenario config:\n{lines}")


class _Section:
    """One config sub-dict with field-by-field extraction diagnostics."""

    def __init__(self, name: str, raw: dict, problems: list):
        self.name = name
        self.raw = dict(raw)
        self.problems = problems

    def flag_unknown(self, known):
        for key in self.raw:
            if key not in known:
                self.problems.append(f"{self.name}.{key}: unknown field")

    def _fail(self, key, msg):
        self.problems.append(f"{self.name}.{key}: {msg}")

    def take_vector(self, key, length, default, broadcast=False,
                    positive=False, nonnegative=False):
        if key not in self.raw:
            return default
        value = self.raw[key]
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            self._fail(key, f"expected number(s), got {value!r}")
            return default
        if broadcast and arr.ndim == 0:
            arr = np.full(length, float(arr))
        if arr.shape != (length,):
            self._fail(key, f"expected {length} values")
            return default
        if not np.all(np.isfinite(arr)):
            self._fail(key, "values must be finite")
            return default
        if positive and np.any(arr <= 0):
            self._fail(key, "values must be positive")
            return default
        if nonnegative and np.any(arr < 0):
            self._fail(key, "values must be non-negative")
            return default
        return arr

    def take_float(self, key, default, positive=False, nonnegative=False):
        if key not in self.raw:
            return default
        value = self.raw[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self._fail(key, f"expected a number, got {value!r}")
            return default
        value = float(value)
        if not np.isfinite(value):
            self._fail(key, "must be finite")
            return default
        if positive and value <= 0:
            self._fail(key, "must be positive")
            return default
        if nonnegative and value < 0:
            self._fail(key, "must be non-negative")
            return default
        return value

    def take_bool(self, key, default):
        if key not in self.raw:
            return default
        value = self.raw[key]
        if not isinstance(value, bool):
            self._fail(key, f"expected true/false, got {value!r}")
            return default
        return value


# chain config key -> (ChainParams field, scale to SI, per-pair?)
_CHAIN_KEYS = {
    "l_cm": ("l", 1e-2, True), "L_cm": ("L", 1e-2, True),
    "l_cg_cm": ("l_cg", 1e-2, True), "L_cg_cm": ("L_cg", 1e-2, True),
    "m_g": ("m", 1e-3, True), "M_g": ("M", 1e-3, True),
    "k_nm_rad": ("k", 1.0, True),
    "l_ee_cm": ("l_ee", 1e-2, False), "l_cg_ee_cm": ("l_cg_ee", 1e-2, False),
    "m_ee_g": ("m_ee", 1e-3, False),
    "l_m": ("l", 1.0, True), "L_m": ("L", 1.0, True),
    "l_cg_m": ("l_cg", 1.0, True), "L_cg_m": ("L_cg", 1.0, True),
    "m_kg": ("m", 1.0, True), "M_kg": ("M", 1.0, True),
    "l_ee_m": ("l_ee", 1.0, False), "l_cg_ee_m": ("l_cg_ee", 1.0, False),
    "m_ee_kg": ("m_ee", 1.0, False),
}


def _merge_chain(base: ChainParams, raw: dict, problems: list) -> ChainParams:
    sec = _Section("chain", raw, problems)
    sec.flag_unknown(set(_CHAIN_KEYS) | {"gravity"})
    n = base.n_pairs
    fields = {name: np.array(getattr(base, name))
              for name in ("l", "L", "l_cg", "L_cg", "m", "M", "k")}
    fields.update(l_ee=base.l_ee, l_cg_ee=base.l_cg_ee, m_ee=base.m_ee)
    seen = set()
    for key, (field, scale, per_pair) in _CHAIN_KEYS.items():
        if key not in raw:
            continue
        if field in seen:
            problems.append(
                f"chain.{key}: field also set through another unit variant")
            continue
        seen.add(field)
        if per_pair:
            val = sec.take_vector(key, n, None, broadcast=True, positive=True)
            if val is not None:
                fields[field] = val * scale
        else:
            val = sec.take_float(key, None, positive=True)
            if val is not None:
                fields[field] = val * scale
    g0 = sec.take_vector("gravity", 2, np.array(base.g0))
    try:
        return ChainParams(g0=g0, **fields)
    except ValueError as exc:
        problems.append(f"chain: {exc}")
        return base


def _merge_contact(base: ContactParams, raw: dict,
                   problems: list) -> ContactParams:
    sec = _Section("contact", raw, problems)
    sec.flag_unknown({"ke_normal", "ke_tangential", "normal", "anchor"})
    ke_n = sec.take_float("ke_normal", base.ke_normal, nonnegative=True)
    ke_t = sec.take_float("ke_tangential", base.ke_tangential,
                          nonnegative=True)
    normal = sec.take_vector("normal", 2, np.array(base.n))
    anchor = sec.take_vector("anchor", 2, np.array(base.p_s))
    if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
        problems.append("contact.normal: must be a unit vector")
        normal = np.array(base.n)
    try:
        return ContactParams(ke_n, ke_t, n=normal, p_s=anchor)
    except ValueError as exc:
        problems.append(f"contact: {exc}")
        return base


def _merge_gains(base: Gains, raw: dict, problems: list) -> Gains:
    sec = _Section("gains", raw, problems)
    sec.flag_unknown({"K_P", "K_I", "K_xi", "K_gamma", "K_eta",
                      "K_gamma_eta", "sigma_p", "eta_t"})
    s, n = len(base.K_P), len(base.K_gamma)
    K_P = sec.take_vector("K_P", s, np.array(base.K_P), broadcast=True,
                          positive=True)
    K_I = sec.take_vector("K_I", s, np.array(base.K_I), broadcast=True)
    K_xi = sec.take_vector("K_xi", s, np.array(base.K_xi), broadcast=True)
    K_gamma = sec.take_vector("K_gamma", n, np.array(base.K_gamma),
                              broadcast=True, positive=True)
    K_eta = sec.take_vector("K_eta", n, np.array(base.K_eta), broadcast=True)
    if "K_gamma_eta" in raw and raw["K_gamma_eta"] is not None:
        kge = sec.take_vector("K_gamma_eta", n, None, broadcast=True)
    else:
        kge = None  # re-derive K_gamma + K_eta
    sigma_p = sec.take_float("sigma_p", base.sigma_p, nonnegative=True)
    eta_t = sec.take_float("eta_t", base.eta_t, nonnegative=True)
    try:
        return Gains(K_P=K_P, K_I=K_I, K_xi=K_xi, K_gamma=K_gamma,
                     K_eta=K_eta, K_gamma_eta=kge, sigma_p=sigma_p,
                     eta_t=eta_t)
    except ValueError as exc:
        problems.append(f"gains: {exc}")
        return base


def _merge_adaptation(base: AdaptiveState, raw: dict, chain: ChainParams,
                      problems: list) -> AdaptiveState:
    sec = _Section("adaptation", raw, problems)
    sec.flag_unknown({"gamma_theta", "gamma_ke", "ke_min", "ke_max", "beta",
                      "ke_hat0", "theta_hat0"})
    gamma_theta = np.array(base.gamma_theta)
    if "gamma_theta" in raw:
        try:
            gamma_theta = defaults.gamma_theta_diag(raw["gamma_theta"])
        except (TypeError, ValueError) as exc:
            problems.append(f"adaptation.gamma_theta: {exc}")
    gamma_ke = sec.take_vector("gamma_ke", 2, np.array(base.gamma_ke),
                               broadcast=True, positive=True)
    ke_min = sec.take_vector("ke_min", 2, np.array(base.ke_min),
                             broadcast=True, positive=True)
    ke_max = sec.take_vector("ke_max", 2, np.array(base.ke_max),
                             broadcast=True, positive=True)
    beta = sec.take_float("beta", base.beta)
    if np.any(ke_min >= ke_max):
        problems.append(
            "adaptation.ke_min: must be strictly below adaptation.ke_max "
            f"(got {ke_min.tolist()} vs {ke_max.tolist()})")
        return base
    if not 0.0 < beta < 1.0:
        problems.append("adaptation.beta: must lie strictly inside (0, 1)")
        return base
    if raw.get("ke_hat0") is not None:
        ke_hat0 = sec.take_vector("ke_hat0", 2, np.array(base.ke_hat))
    elif "ke_hat0" in raw or "ke_min" in raw or "ke_max" in raw:
        ke_hat0 = 0.5 * (ke_min + ke_max)  # explicit null or moved bounds
    else:
        ke_hat0 = np.array(base.ke_hat)
    if np.any(ke_hat0 < ke_min) or np.any(ke_hat0 > ke_max):
        problems.append("adaptation.ke_hat0: must start inside the bounds")
        return base
    if raw.get("theta_hat0") is not None:
        flat = sec.take_vector("theta_hat0", base.theta_hat.size, None)
        theta0 = (flat.reshape(base.theta_hat.shape)
                  if flat is not None else np.array(base.theta_hat))
    else:
        theta0 = theta_from(chain.k, ke_hat0[0], ke_hat0[1])
    try:
        return AdaptiveState(theta0, ke_hat0, gamma_theta, gamma_ke,
                             ke_min, ke_max, beta)
    except ValueError as exc:
        problems.append(f"adaptation: {exc}")
        return base


def _merge_fidelity(base: FidelityOptions, raw: dict,
                    problems: list) -> FidelityOptions:
    sec = _Section("fidelity", raw, problems)
    sec.flag_unknown({"quantization_on", "noise_on", "servo_quantization",
                      "force_noise_std", "plant_dt", "measurement_rate"})
    opts = FidelityOptions(
        servo_quantization=sec.take_float(
            "servo_quantization", base.servo_quantization, nonnegative=True),
        force_noise_std=sec.take_float(
            "force_noise_std", base.force_noise_std, nonnegative=True),
        plant_dt=sec.take_float("plant_dt", base.plant_dt, positive=True),
        measurement_rate=sec.take_float(
            "measurement_rate", base.measurement_rate, positive=True),
        quantization_on=sec.take_bool("quantization_on",
                                      base.quantization_on),
        noise_on=sec.take_bool("noise_on", base.noise_on),
    )
    ratio = 1.0 / (opts.measurement_rate * opts.plant_dt)
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        problems.append(
            "fidelity.plant_dt: control period 1/measurement_rate must be "
            "an integer multiple of plant_dt")
    return opts


def _parse_phases(raw_list, problems: list) -> list[Phase]:
    if not isinstance(raw_list, list) or not raw_list:
        problems.append("phases: expected a non-empty list")
        return []
    phases = []
    for i, raw in enumerate(raw_list):
        name = f"phases[{i}]"
        if not isinstance(raw, dict):
            problems.append(f"{name}: expected an object")
            continue
        sec = _Section(name, raw, problems)
        sec.flag_unknown({"kind", "target", "advance_tol", "timeout", "ramp"})
        kind = raw.get("kind")
        if kind not in ("position", "force"):
            problems.append(
                f"{name}.kind: expected 'position' or 'force', got {kind!r}")
            continue
        length = 3 if kind == "position" else 2
        target = sec.take_vector("target", length, None)
        if target is None:
            if "target" not in raw:
                problems.append(f"{name}.target: required")
            continue
        tol = (None if raw.get("advance_tol") is None
               else sec.take_float("advance_tol", None, positive=True))
        timeout = (None if raw.get("timeout") is None
                   else sec.take_float("timeout", None, positive=True))
        ramp = sec.take_float("ramp", 0.0, nonnegative=True)
        try:
            phases.append(Phase(kind, target, advance_tol=tol,
                                timeout=timeout, ramp=ramp))
        except ValueError as exc:
            problems.append(f"{name}: {exc}")
    return phases


_TOP_KEYS = {"scenario", "name", "seed", "duration", "certify_monotone",
             "gamma0", "chain", "contact", "gains", "adaptation", "fidelity",
             "phases"}


def scenario_from_dict(cfg: dict) -> Scenario:
    """Build a scenario from a config dict merged over its base preset.

    Args:
        cfg: parsed JSON object; ``{}`` selects the default benchmark.

    Returns:
        Fully validated Scenario in SI units.

    Raises:
        ConfigError: listing every invalid field.
    """
    problems: list[str] = []
    if not isinstance(cfg, dict):
        raise ConfigError(["top level: expected a JSON object"])
    base_name = cfg.get("scenario", DEFAULT_SCENARIO)
    if base_name not in BUILTIN_SCENARIOS:
        problems.append(
            f"scenario: unknown base {base_name!r}, expected one of "
            f"{sorted(BUILTIN_SCENARIOS)}")
        base_name = DEFAULT_SCENARIO
    base = BUILTIN_SCENARIOS[base_name]()
    for key in cfg:
        if key not in _TOP_KEYS:
            problems.append(f"{key}: unknown field")

    def section(key):
        raw = cfg.get(key, {})
        if not isinstance(raw, dict):
            problems.append(f"{key}: expected an object")
            return {}
        return raw

    chain = _merge_chain(base.chain, section("chain"), problems)
    contact = _merge_contact(base.contact, section("contact"), problems)
    gains = _merge_gains(base.gains, section("gains"), problems)
    adaptation = _merge_adaptation(base.adaptation, section("adaptation"),
                                   chain, problems)
    fidelity = _merge_fidelity(base.fidelity, section("fidelity"), problems)
    phases = (base.phases if "phases" not in cfg
              else _parse_phases(cfg["phases"], problems))

    name = cfg.get("name", base.name)
    if not isinstance(name, str) or not name:
        problems.append("name: expected a non-empty string")
        name = base.name
    seed = cfg.get("seed", base.seed)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        problems.append("seed: expected a non-negative integer")
        seed = base.seed
    duration = cfg.get("duration", base.duration)
    if (isinstance(duration, bool)
            or not isinstance(duration, (int, float))
            or not np.isfinite(duration) or duration <= 0):
        problems.append("duration: expected a positive number of seconds")
        duration = base.duration
    certify = cfg.get("certify_monotone", base.certify_monotone)
    if not isinstance(certify, bool):
        problems.append("certify_monotone: expected true/false")
        certify = base.certify_monotone
    top = _Section("scenario", cfg, problems)
    gamma0 = top.take_vector("gamma0", chain.n_act, np.array(base.gamma0))

    if problems:
        raise ConfigError(problems)
    return Scenario(name=name, chain=chain, contact=contact, gains=gains,
                    adaptation=adaptation, gamma0=gamma0, phases=phases,
                    duration=float(duration), seed=seed, fidelity=fidelity,
                    certify_monotone=certify)


def load_scenario(path) -> Scenario:
    """Load and validate a JSON scenario config.

    An empty file yields the default benchmark mission.  Parse errors carry
    line/column positions; validation errors list every bad field.
    """
    text = Path(path).read_text()
    if not text.strip():
        return BUILTIN_SCENARIOS[DEFAULT_SCENARIO]()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            [f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    return scenario_from_dict(cfg)


def _floats(arr) -> list:
    return [float(v) for v in np.asarray(arr).ravel()]


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serialize a scenario to a fully-explicit config dict.

    The chain block uses the SI key variants, so loading the result
    reproduces the scenario exactly (no unit round-off).
    """
    chain, ct, g, ad, fo = (scenario.chain, scenario.contact, scenario.gains,
                            scenario.adaptation, scenario.fidelity)
    return {
        "name": scenario.name,
        "seed": int(scenario.seed),
        "duration": float(scenario.duration),
        "certify_monotone": bool(scenario.certify_monotone),
        "gamma0": _floats(scenario.gamma0),
        "chain": {
            "l_m": _floats(chain.l), "L_m": _floats(chain.L),
            "l_cg_m": _floats(chain.l_cg), "L_cg_m": _floats(chain.L_cg),
            "m_kg": _floats(chain.m), "M_kg": _floats(chain.M),
            "k_nm_rad": _floats(chain.k),
            "l_ee_m": float(chain.l_ee), "l_cg_ee_m": float(chain.l_cg_ee),
            "m_ee_kg": float(chain.m_ee),
            "gravity": _floats(chain.g0),
        },
        "contact": {
            "ke_normal": float(ct.ke_normal),
            "ke_tangential": float(ct.ke_tangential),
            "normal": _floats(ct.n), "anchor": _floats(ct.p_s),
        },
        "gains": {
            "K_P": _floats(g.K_P), "K_I": _floats(g.K_I),
            "K_xi": _floats(g.K_xi), "K_gamma": _floats(g.K_gamma),
            "K_eta": _floats(g.K_eta), "K_gamma_eta": _floats(g.K_gamma_eta),
            "sigma_p": float(g.sigma_p), "eta_t": float(g.eta_t),
        },
        "adaptation": {
            "gamma_theta": _floats(ad.gamma_theta),
            "gamma_ke": _floats(ad.gamma_ke),
            "ke_min": _floats(ad.ke_min), "ke_max": _floats(ad.ke_max),
            "beta": float(ad.beta),
            "ke_hat0": _floats(ad.ke_hat),
            "theta_hat0": _floats(ad.theta_hat),
        },
        "fidelity": {
            "quantization_on": bool(fo.quantization_on),
            "noise_on": bool(fo.noise_on),
            "servo_quantization": float(fo.servo_quantization),
            "force_noise_std": float(fo.force_noise_std),
            "plant_dt": float(fo.plant_dt),
            "measurement_rate": float(fo.measurement_rate),
        },
        "phases": [
            {"kind": ph.kind, "target": _floats(ph.target),
             "advance_tol": (None if ph.advance_tol is None
                             else float(ph.advance_tol)),
             "timeout": (None if ph.timeout is None else float(ph.timeout)),
             "ramp": float(ph.ramp)}
            for ph in scenario.phases
        ],
    }


def save_scenario(scenario: Scenario, path) -> None:
    """Write the fully-explicit JSON config for a scenario."""
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2)
                          + "\n")
