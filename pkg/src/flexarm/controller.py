"""Unified force/motion controller acting on the actuated joint rates.

One control law covers free motion, contact and the transitions between
them: a task-space position loop with integral action runs through the
flexibility-corrected Jacobian, a force loop pushes along the interface
stiffness direction, and the position reference itself is steered by the
force error so that contact is approached and released without switching
controllers.  A small force-error deadband makes the force loop release
cleanly when out of contact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Gains:
    """Controller gains.  Diagonal matrices are stored as 1-D arrays.

    ``K_P``/``K_I``/``K_xi`` act on the task-space error, integral state and
    integral leak (length S); ``K_gamma``, ``K_eta`` and ``K_gamma_eta`` act
    per actuated joint (length N).  ``K_gamma_eta`` steers the reference
    during contact; the stability analysis pins it to K_gamma + K_eta, which
    is the default when omitted.  ``sigma_p`` scales the reference softening
    and ``eta_t`` is the force-error deadband threshold in N.
    """

    K_P: np.ndarray
    K_I: np.ndarray
    K_xi: np.ndarray
    K_gamma: np.ndarray
    K_eta: np.ndarray
    K_gamma_eta: np.ndarray | None = None
    sigma_p: float = 0.3
    eta_t: float = 0.1

    def __post_init__(self):
        for name in ("K_P", "K_I", "K_xi", "K_gamma", "K_eta"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.K_gamma_eta is None:
            self.K_gamma_eta = self.K_gamma + self.K_eta
        else:
            self.K_gamma_eta = np.asarray(self.K_gamma_eta, dtype=float)
        if np.any(self.K_P <= 0) or np.any(self.K_gamma <= 0):
            raise ValueError("K_P and K_gamma must be positive definite")
        if self.sigma_p < 0 or self.eta_t < 0:
            raise ValueError("sigma_p and eta_t must be non-negative")


@dataclass
class ControllerState:
    """Integral state xi, task reference q_r and force reference f_r."""

    xi: np.ndarray
    q_r: np.ndarray
    f_r: np.ndarray

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.q_r = np.asarray(self.q_r, dtype=float)
        self.f_r = np.asarray(self.f_r, dtype=float)

    def copy(self) -> "ControllerState":
        return ControllerState(self.xi.copy(), self.q_r.copy(), self.f_r.copy())


@dataclass
class ControlOutput:
    """Rates produced by one evaluation of the control law."""

    gamma_dot: np.ndarray
    xi_dot: np.ndarray
    q_r_dot: np.ndarray
    eta: np.ndarray
    sigma: float


def sigma(eta_norm: float, sigma_p: float) -> float:
    """Reference softening factor, linear in the force error norm."""
    return sigma_p * eta_norm


def deadband(eta: np.ndarray, eta_t: float) -> np.ndarray:
    """Zero the force error below the threshold; pass it through otherwise."""
    eta = np.asarray(eta, dtype=float)
    if np.linalg.norm(eta) < eta_t:
        return np.zeros_like(eta)
    return eta


def control_step(state: ControllerState, e: np.ndarray, eta_meas: np.ndarray,
                 J_T_hat: np.ndarray, Jp_gamma: np.ndarray,
                 Ke_hat: np.ndarray, gains: Gains) -> ControlOutput:
    """Evaluate the control law at one sampling instant.

    Args:
        state: current integral state and references.
        e: task-space error q_r - q (S,).
        eta_meas: measured force error f_r - f_meas (2,), pre-deadband.
        J_T_hat: flexibility-corrected task Jacobian (S x N).
        Jp_gamma: position Jacobian of the actuated joints (2 x N).
        Ke_hat: estimated interface stiffness matrix (2 x 2).
        gains: controller gains.

    Returns:
        ControlOutput with the commanded joint rates, the integral and
        reference rates, the deadbanded force error actually used, and the
        softening factor.
    """
    g = gains
    eta_norm = math.hypot(eta_meas[0], eta_meas[1])
    if eta_norm < g.eta_t:
        eta = np.zeros_like(eta_meas)
        sig = 0.0
    else:
        eta = eta_meas
        sig = g.sigma_p * eta_norm

    Kp_e = g.K_P * e
    force_push = Jp_gamma.T @ (Ke_hat @ eta)

    gamma_dot = (g.K_gamma * (J_T_hat.T @ (Kp_e + g.K_I * state.xi))
                 + g.K_eta * force_push)
    xi_dot = (g.K_I * (J_T_hat @ (g.K_gamma * (J_T_hat.T @ Kp_e + force_push)))
              - g.K_xi * state.xi)
    q_r_dot = J_T_hat @ (g.K_gamma_eta * force_push) - sig * Kp_e

    return ControlOutput(gamma_dot, xi_dot, q_r_dot, eta, sig)


def integrate_controller(state: ControllerState, out: ControlOutput,
                         dt: float) -> None:
    """Explicit Euler update of the integral state and the task reference."""
    state.xi = state.xi + dt * out.xi_dot
    state.q_r = state.q_r + dt * out.q_r_dot
