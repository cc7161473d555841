"""Quasi-static simulated plant with optional measurement fidelity effects.

The servos track rate commands directly (the bench hardware emulates rate
control through position increments), the flexible joints settle to the
static torque balance at every substep, and the interface force follows the
elastic contact model.  Measurement fidelity covers the servo encoder
quantisation and Gaussian force-sensor noise; both can be switched off for
exact runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import ChainParams, JointState, chain_geometry
from .contact import ContactParams, contact_force
from .flex import settle

SERVO_QUANT_DEFAULT = 0.0052  # rad, one encoder tick of the bench servos
FORCE_NOISE_STD_DEFAULT = 0.02  # N
PLANT_DT_DEFAULT = 1e-3  # s
CONTROL_RATE_DEFAULT = 40.0  # Hz


@dataclass
class FidelityOptions:
    """Measurement fidelity switches and rate constants."""

    servo_quantization: float = SERVO_QUANT_DEFAULT
    force_noise_std: float = FORCE_NOISE_STD_DEFAULT
    plant_dt: float = PLANT_DT_DEFAULT
    measurement_rate: float = CONTROL_RATE_DEFAULT
    quantization_on: bool = True
    noise_on: bool = True

    @classmethod
    def all_off(cls, **kw) -> "FidelityOptions":
        return cls(quantization_on=False, noise_on=False, **kw)

    def with_fidelity(self, enabled: bool) -> "FidelityOptions":
        return FidelityOptions(self.servo_quantization, self.force_noise_std,
                               self.plant_dt, self.measurement_rate,
                               enabled, enabled)


@dataclass
class PlantState:
    """True plant state at time t."""

    t: float
    gamma: np.ndarray
    delta: np.ndarray
    p: np.ndarray
    alpha: float
    f_true: np.ndarray
    contact_active: bool

    def joint_state(self) -> JointState:
        return JointState(self.gamma, self.delta)


def _refresh_outputs(params: ChainParams, contact: ContactParams | None,
                     t: float, gamma: np.ndarray, delta: np.ndarray,
                     active: bool) -> PlantState:
    # The activity flag comes from the settled branch, not a fresh
    # penetration test: inside the snap-through band the force stays
    # released even though the end-effector slightly overlaps.
    geo = chain_geometry(params, JointState(gamma, delta))
    if contact is not None:
        f = contact_force(geo.p, contact, active=active)
    else:
        f = np.zeros(2)
    return PlantState(t, gamma, delta, geo.p, geo.alpha, f, active)


def init_plant(params: ChainParams, gamma0: np.ndarray,
               contact: ContactParams | None = None) -> PlantState:
    """Initial plant state: settle the deflection at the starting pose."""
    gamma0 = np.asarray(gamma0, dtype=float)
    delta, active = settle(params, gamma0, contact)
    return _refresh_outputs(params, contact, 0.0, gamma0, delta, active)


def plant_step(state: PlantState, gamma_dot_cmd: np.ndarray,
               params: ChainParams, contact: ContactParams | None,
               dt: float) -> PlantState:
    """Advance the plant by one substep under a held rate command.

    gamma integrates the command exactly; delta re-settles to the static
    balance (warm-started from the previous substep), and the interface
    force follows from the new end-effector position.
    """
    gamma = state.gamma + dt * np.asarray(gamma_dot_cmd, dtype=float)
    delta, active = settle(params, gamma, contact, delta0=state.delta)
    return _refresh_outputs(params, contact, state.t + dt, gamma, delta,
                            active)


def measure(state: PlantState, params: ChainParams, opts: FidelityOptions,
            rng: np.random.Generator | None = None):
    """Sample the sensors.

    The task pose is reconstructed from the quantised servo angles and the
    (analog) flexible-joint angles, exactly as the bench does; the force
    sensor adds zero-mean Gaussian noise per axis.

    Returns:
        (q_meas, f_meas): measured task vector (3,) and force (2,).
    """
    gamma = state.gamma
    if opts.quantization_on and opts.servo_quantization > 0.0:
        quant = opts.servo_quantization
        gamma = np.round(gamma / quant) * quant
    geo = chain_geometry(params, JointState(gamma, state.delta))
    q_meas = np.array([geo.p[0], geo.p[1], geo.alpha])

    f_meas = state.f_true.copy()
    if opts.noise_on and opts.force_noise_std > 0.0:
        if rng is None:
            raise ValueError("rng required when force noise is enabled")
        f_meas = f_meas + rng.normal(0.0, opts.force_noise_std, size=2)
    return q_meas, f_meas
