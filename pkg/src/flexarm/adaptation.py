"""On-line adaptation of the interface moduli and the deflection parameters.

Two estimates evolve while the arm moves: the pair of interface moduli
(normal, tangential) used by the force loop, and the parameter matrix
Theta_hat that corrects the task Jacobian for flexibility.  The moduli are
kept inside known bounds by a smooth projection operator built on a convex
indicator; inside the bounds the raw update passes through unchanged, in a
boundary layer an outward update is scaled down continuously, and on the
boundary itself an outward update is cancelled entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flex import theta_from


@dataclass
class AdaptiveState:
    """Adaptive estimates plus their gains and projection bounds.

    ``theta_hat`` is the 3M x M deflection parameter estimate.
    ``ke_hat`` holds the estimated (normal, tangential) interface moduli.
    ``gamma_theta`` is the diagonal of the Theta adaptation gain (3M,),
    ``gamma_ke`` the per-channel moduli gains (2,).  ``ke_min``/``ke_max``
    bound each modulus channel and ``beta`` sets the width of the projection
    boundary layer.
    """

    theta_hat: np.ndarray
    ke_hat: np.ndarray
    gamma_theta: np.ndarray
    gamma_ke: np.ndarray
    ke_min: np.ndarray
    ke_max: np.ndarray
    beta: float = 0.4

    def __post_init__(self):
        self.theta_hat = np.asarray(self.theta_hat, dtype=float)
        self.ke_hat = np.asarray(self.ke_hat, dtype=float)
        self.gamma_theta = np.asarray(self.gamma_theta, dtype=float)
        self.gamma_ke = np.asarray(self.gamma_ke, dtype=float)
        self.ke_min = np.asarray(self.ke_min, dtype=float)
        self.ke_max = np.asarray(self.ke_max, dtype=float)
        if np.any(self.ke_min >= self.ke_max):
            raise ValueError("ke_min must be strictly below ke_max")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        for ch in range(2):
            if rho(self.ke_hat[ch], self.ke_min[ch], self.ke_max[ch],
                   self.beta) > 1.0:
                raise ValueError("initial moduli must start inside the bounds")

    def copy(self) -> "AdaptiveState":
        return AdaptiveState(self.theta_hat.copy(), self.ke_hat.copy(),
                             self.gamma_theta.copy(), self.gamma_ke.copy(),
                             self.ke_min.copy(), self.ke_max.copy(), self.beta)

    @classmethod
    def initialise(cls, k_flex, gamma_theta, gamma_ke, ke_min, ke_max,
                   beta: float = 0.4, ke_hat0=None) -> "AdaptiveState":
        """Seed the estimates: mid-range moduli and the matching Theta."""
        ke_min = np.asarray(ke_min, dtype=float)
        ke_max = np.asarray(ke_max, dtype=float)
        if ke_hat0 is None:
            ke_hat0 = 0.5 * (ke_min + ke_max)
        ke_hat0 = np.asarray(ke_hat0, dtype=float)
        theta0 = theta_from(k_flex, ke_hat0[0], ke_hat0[1])
        return cls(theta0, ke_hat0, gamma_theta, gamma_ke, ke_min, ke_max,
                   beta)


def rho(kappa_hat: float, kappa_min: float, kappa_max: float,
        beta: float) -> float:
    """Convex projection indicator.

    Negative in the inner safe region, rising through (0, 1] across the
    boundary layer, exactly 1 on the bounds.  At the interval midpoint the
    value is -beta^2 / (1 - beta^2).
    """
    centre = 0.5 * (kappa_max + kappa_min)
    radius = 0.5 * (kappa_max - kappa_min)
    return ((kappa_hat - centre) ** 2 / ((1.0 - beta ** 2) * radius ** 2)
            - beta ** 2 / (1.0 - beta ** 2))


def rho_grad(kappa_hat: float, kappa_min: float, kappa_max: float,
             beta: float) -> float:
    """Derivative of the projection indicator with respect to kappa_hat."""
    centre = 0.5 * (kappa_max + kappa_min)
    radius = 0.5 * (kappa_max - kappa_min)
    return 2.0 * (kappa_hat - centre) / ((1.0 - beta ** 2) * radius ** 2)


def proj(rate: float, kappa_hat: float, kappa_min: float, kappa_max: float,
         beta: float) -> float:
    """Projected update rate for one modulus channel.

    The raw rate passes through unchanged when the estimate is in the inner
    region or the rate points inward; an outward rate inside the boundary
    layer is scaled by (1 - rho), reaching zero exactly on the bound.
    """
    r = rho(kappa_hat, kappa_min, kappa_max, beta)
    if r <= 0.0 or rho_grad(kappa_hat, kappa_min, kappa_max, beta) * rate <= 0.0:
        return rate
    return (1.0 - min(r, 1.0)) * rate


def ke_raw_rates(eta: np.ndarray, Jp_gamma: np.ndarray, gamma_dot: np.ndarray,
                 gamma_ke: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Unprojected moduli update rates for the (normal, tangential) channels.

    Each channel correlates the force error along its interface direction
    with the commanded end-effector velocity: rate = -gamma * eta^T N Jp_gamma
    gamma_dot, with N the direction projector.

    Args:
        eta: deadbanded force error (2,), the same vector the control law used.
        Jp_gamma: position Jacobian of the actuated joints (2 x N).
        gamma_dot: commanded actuated rates (N,).
        gamma_ke: per-channel adaptation gains (2,).
        n: unit interface normal.
    """
    p_dot = Jp_gamma @ gamma_dot
    normal_speed = n[0] * p_dot[0] + n[1] * p_dot[1]
    eta_n = n[0] * eta[0] + n[1] * eta[1]
    rate_n = -gamma_ke[0] * eta_n * normal_speed
    rate_t = -gamma_ke[1] * (eta[0] * p_dot[0] + eta[1] * p_dot[1]
                             - eta_n * normal_speed)
    return np.array([rate_n, rate_t])


def ke_update(state: AdaptiveState, eta: np.ndarray, Jp_gamma: np.ndarray,
              gamma_dot: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Projected moduli rates, ready for Euler integration."""
    raw = ke_raw_rates(eta, Jp_gamma, gamma_dot, state.gamma_ke, n)
    ke, lo, hi, b = state.ke_hat, state.ke_min, state.ke_max, state.beta
    return np.array(
        [proj(float(raw[0]), float(ke[0]), float(lo[0]), float(hi[0]), b),
         proj(float(raw[1]), float(ke[1]), float(lo[1]), float(hi[1]), b)])


def theta_update(state: AdaptiveState, Jfg: np.ndarray, gamma_dot: np.ndarray,
                 e: np.ndarray, K_P: np.ndarray,
                 J_delta: np.ndarray) -> np.ndarray:
    """Rank-one update direction for Theta_hat.

    theta_rate = Gamma_Theta (J_fg gamma_dot) (e^T K_P J_delta), an outer
    product of the stacked deflection drive with the task error seen through
    the flexible columns.
    """
    left = state.gamma_theta * (Jfg @ gamma_dot)
    right = (K_P * e) @ J_delta
    return left[:, None] * right


def integrate_adaptation(state: AdaptiveState, theta_rate: np.ndarray,
                         ke_rates: np.ndarray, dt: float) -> None:
    """Explicit Euler update of the adaptive estimates.

    The continuous projection keeps the moduli inside their bounds; a final
    clip guards the discrete step against overshooting them within one
    sample at extreme adaptation gains.
    """
    state.theta_hat = state.theta_hat + dt * theta_rate
    ke = state.ke_hat + dt * ke_rates
    state.ke_hat = np.minimum(np.maximum(ke, state.ke_min), state.ke_max)
