"""Shared helpers for the test suite: FD oracles and random pose sampling.

The finite-difference Jacobians here are the reference implementations the
analytic code is judged against; they only use forward kinematics.
"""

from __future__ import annotations

import numpy as np

from flexarm.chain import JointState, chain_geometry, forward_kinematics, jacobians


def random_state(rng, gamma_scale=0.7, delta_scale=0.08) -> JointState:
    gamma = rng.uniform(-gamma_scale, gamma_scale, 4)
    delta = rng.uniform(-delta_scale, delta_scale, 3)
    return JointState(gamma, delta)


def task_vector(params, gamma, delta) -> np.ndarray:
    pose = forward_kinematics(params, JointState(gamma, delta))
    return np.array([pose.p[0], pose.p[1], pose.alpha])


def fd_task_jacobian(params, state: JointState, h: float = 1e-6) -> np.ndarray:
    """Central FD of the task map over all seven angles, columns [gamma|delta]."""
    gamma, delta = state.gamma, state.delta
    J = np.empty((3, 7))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        J[:, i] = (task_vector(params, gamma + e, delta)
                   - task_vector(params, gamma - e, delta)) / (2 * h)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        J[:, 4 + i] = (task_vector(params, gamma, delta + e)
                       - task_vector(params, gamma, delta - e)) / (2 * h)
    return J


def fd_dJp_delta_dgamma(params, state: JointState, h: float = 1e-6) -> np.ndarray:
    """Central FD of Jp_delta with respect to each actuated angle: (N, 2, M)."""
    out = np.empty((4, 2, 3))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        jp = jacobians(params, JointState(state.gamma + e, state.delta)).Jp_delta
        jm = jacobians(params, JointState(state.gamma - e, state.delta)).Jp_delta
        out[i] = (jp - jm) / (2 * h)
    return out


def fd_dJcg_delta_dgamma(params, state: JointState, h: float = 1e-6) -> np.ndarray:
    """Central FD of J_cg_delta with respect to each actuated angle: (N, 2, M)."""
    out = np.empty((4, 2, 3))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        jp = jacobians(params, JointState(state.gamma + e, state.delta)).J_cg_delta
        jm = jacobians(params, JointState(state.gamma - e, state.delta)).J_cg_delta
        out[i] = (jp - jm) / (2 * h)
    return out


def fd_d2x_ddelta(params, state: JointState, h: float = 1e-6) -> np.ndarray:
    """Central FD Hessian of the EE x-coordinate over the flexible angles."""
    out = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        jp = jacobians(params, JointState(state.gamma, state.delta + e)).Jp_delta[0]
        jm = jacobians(params, JointState(state.gamma, state.delta - e)).Jp_delta[0]
        out[:, j] = (jp - jm) / (2 * h)
    return out


def rel_err(a, b, floor: float = 1e-12) -> float:
    """Normwise relative error |a - b| / max(|b|, floor)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    denom = max(np.linalg.norm(b.ravel()), floor)
    return float(np.linalg.norm((a - b).ravel()) / denom)


def com_vector(params, state: JointState) -> np.ndarray:
    geo = chain_geometry(params, state)
    return (geo.link_cg * geo.masses).sum(axis=1) / geo.m_total
