"""Machine-checkable stability certificate for the closed loop.

Collects the pieces of the stability argument in computable form: the
composite energy function over the stacked error state x = (xi, e, eta)
plus the parameter estimation errors, the analytic decrease bound (a sum of
negative squares, so its sign is exact in floating point), and the
closed-loop system matrix whose symmetric part produces that bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adaptation import AdaptiveState
from .chain import JacobianSet, rank_margin
from .controller import Gains


@dataclass
class Certificate:
    """Per-step certificate record."""

    V: float
    Vdot_bound: float
    x: np.ndarray
    svmin_J: float
    svmin_Jp_gamma: float


def _grams(J_T_hat, Jp_gamma, gains):
    G_T = (J_T_hat * gains.K_gamma) @ J_T_hat.T
    G_Tg = (J_T_hat * gains.K_gamma) @ Jp_gamma.T
    G_g = (Jp_gamma * gains.K_eta) @ Jp_gamma.T
    return G_T, G_Tg, G_g


def assemble_closed_loop(J_T_hat: np.ndarray, Jp_gamma: np.ndarray,
                         Ke_hat: np.ndarray, gains: Gains,
                         sigma_val: float) -> np.ndarray:
    """System matrix of the estimate part of the error dynamics.

    Returns A such that x_dot = A x + (uncertainty terms), with
    x = (xi, e, eta).  The Gram products of the corrected task Jacobian and
    the actuated position Jacobian appear with the loop gains in between;
    the weighted symmetric part of A is negative semidefinite, which is the
    substance of the decrease bound.
    """
    S = J_T_hat.shape[0]
    G_T, G_Tg, G_g = _grams(J_T_hat, Jp_gamma, gains)
    K_P = np.diag(gains.K_P)
    K_I = np.diag(gains.K_I)

    A = np.zeros((2 * S + 2, 2 * S + 2))
    s1 = slice(0, S)
    s2 = slice(S, 2 * S)
    s3 = slice(2 * S, 2 * S + 2)
    A[s1, s1] = -np.diag(gains.K_xi)
    A[s1, s2] = K_I @ G_T @ K_P
    A[s1, s3] = K_I @ G_Tg @ Ke_hat
    A[s2, s1] = -G_T @ K_I
    A[s2, s2] = -(G_T + sigma_val * np.eye(S)) @ K_P
    A[s2, s3] = G_Tg @ Ke_hat
    A[s3, s1] = -Ke_hat @ G_Tg.T @ K_I
    A[s3, s2] = -Ke_hat @ G_Tg.T @ K_P
    A[s3, s3] = -Ke_hat @ G_g @ Ke_hat
    return A


def assemble_uncertainty(J_delta: np.ndarray, theta_tilde: np.ndarray,
                         Jfg: np.ndarray, Jp_gamma: np.ndarray,
                         Ke_tilde: np.ndarray) -> np.ndarray:
    """Input matrix of the parameter-error terms: x_dot += B gamma_dot."""
    S = J_delta.shape[0]
    n_act = Jp_gamma.shape[1]
    B = np.zeros((2 * S + 2, n_act))
    B[S:2 * S, :] = J_delta @ (theta_tilde.T @ Jfg)
    B[2 * S:, :] = -Ke_tilde @ Jp_gamma
    return B


def state_weight(gains: Gains) -> np.ndarray:
    """Weight matrix of the quadratic state part: diag(I, K_P, I)."""
    S = len(gains.K_P)
    return np.diag(np.concatenate((np.ones(S), gains.K_P, np.ones(2))))


def lyapunov_value(xi: np.ndarray, e: np.ndarray, eta: np.ndarray,
                   theta_tilde: np.ndarray, ke_tilde: np.ndarray,
                   gains: Gains, adapt: AdaptiveState) -> float:
    """Composite energy: weighted state square plus gain-weighted parameter errors."""
    v_state = 0.5 * (xi @ xi + e @ (gains.K_P * e) + eta @ eta)
    v_theta = 0.5 * float(np.sum(theta_tilde ** 2 / adapt.gamma_theta[:, None]))
    v_ke = 0.5 * float(np.sum(ke_tilde ** 2 / adapt.gamma_ke))
    return float(v_state) + v_theta + v_ke


def vdot_bound(xi: np.ndarray, e: np.ndarray, eta: np.ndarray,
               J_T_hat: np.ndarray, Jp_gamma: np.ndarray,
               Ke_hat: np.ndarray, gains: Gains, sigma_val: float) -> float:
    """Analytic decrease bound, evaluated as a sum of negative squares.

    Equals x^T K A x with the state weight K and the closed-loop matrix A;
    writing each quadratic through the joint-space image keeps every term
    non-positive exactly, so the bound's sign carries no rounding ambiguity.
    """
    e_bar = gains.K_P * e
    v = J_T_hat.T @ e_bar
    w = Jp_gamma.T @ (Ke_hat @ eta)
    total = (np.sum(gains.K_xi * xi ** 2)
             + np.sum(gains.K_gamma * v ** 2)
             + sigma_val * np.sum(e_bar ** 2)
             + np.sum(gains.K_eta * w ** 2))
    return -float(total)


def certificate(xi: np.ndarray, e: np.ndarray, eta: np.ndarray,
                jacs: JacobianSet, J_T_hat: np.ndarray, Ke_hat: np.ndarray,
                theta_tilde: np.ndarray, ke_tilde: np.ndarray, gains: Gains,
                adapt: AdaptiveState, sigma_val: float) -> Certificate:
    """Assemble the per-step certificate record."""
    V = lyapunov_value(xi, e, eta, theta_tilde, ke_tilde, gains, adapt)
    bound = vdot_bound(xi, e, eta, J_T_hat, jacs.Jp_gamma, Ke_hat, gains,
                       sigma_val)
    x = np.concatenate((xi, e, eta))
    return Certificate(V, bound, x, rank_margin(jacs.J),
                       rank_margin(jacs.Jp_gamma))
