"""Pseudo-static flexible-joint deflection model.

Series elasticity is stiff compared to the task motion, so the flexible
angles are treated as instantaneously settling to the torque balance

    K delta = -Jp_delta^T f + g_delta,

with f the elastic interface force at the end-effector and g_delta the
gravity torque seen by the flexible joints.  This module solves that
balance, and assembles the compound force/gravity Jacobian J_fg that maps
actuated joint rates to the stacked deflection-drive contributions (normal
force block, tangential force block, gravity block).  With the parameter
matrix Theta built from the interface moduli and the joint stiffnesses, the
deflection rate estimate used by the controller is

    delta_dot = -Theta^T J_fg gamma_dot.
"""

from __future__ import annotations

import numpy as np

from .chain import (ChainParams, JacobianSet, JointState, _perp,
                    chain_geometry, second_derivative_wrt_delta)
from .contact import ContactParams, penetration, stiffness_matrix

SOLVE_TOL = 1e-10
SOLVE_MAX_ITER = 100
_MAX_NEWTON_STEP = 0.5


class DeflectionError(RuntimeError):
    """Raised when the static deflection balance cannot be solved."""


def gravity_torque(params: ChainParams, state: JointState,
                   jacs: JacobianSet | None = None) -> np.ndarray:
    """Gravity term g_delta = J_cg_delta^T * m_total * g0 at a joint state."""
    if jacs is not None:
        J_cg_delta = jacs.J_cg_delta
    else:
        geo = chain_geometry(params, state)
        J_cg_delta = np.empty((2, params.n_flex))
        for i, sd in enumerate(geo.delta_slots):
            rel = geo.link_cg[:, sd:] - geo.joint_pos[:, sd, None]
            J_cg_delta[:, i] = _perp(rel) @ geo.masses[sd:] / geo.m_total
    return J_cg_delta.T @ (params.m_total * params.g0)


def static_residual(params: ChainParams, gamma: np.ndarray,
                    delta: np.ndarray,
                    contact: ContactParams | None = None,
                    active: bool | None = None) -> np.ndarray:
    """Residual K delta + Jp_delta^T f - g_delta of the flexibility balance.

    Written via the full Jacobian path on purpose: it double-checks the
    solver, which uses a condensed evaluation of the same quantities.

    ``active`` overrides the penetration test, which matters inside the
    snap-through band where the settled state keeps the force released even
    though the end-effector slightly overlaps the interface.
    """
    from .contact import contact_force

    state = JointState(np.asarray(gamma, dtype=float),
                       np.asarray(delta, dtype=float))
    geo = chain_geometry(params, state)
    Jp_delta = _perp(geo.p[:, None] - geo.joint_pos[:, geo.delta_slots])
    f = (contact_force(geo.p, contact, active=active)
         if contact is not None else np.zeros(2))
    g_delta = gravity_torque(params, state)
    return params.k * state.delta + Jp_delta.T @ f - g_delta


class _SolverWorkspace:
    """Per-chain constants reused across solver calls."""

    __slots__ = ("gamma_slots", "delta_slots", "lengths", "cg_off", "masses",
                 "max_idx", "n_links")

    def __init__(self, params: ChainParams):
        n = params.n_pairs
        self.n_links = 2 * n + 1
        self.gamma_slots = np.arange(0, 2 * n + 1, 2)
        self.delta_slots = np.arange(1, 2 * n, 2)
        lengths = np.empty(self.n_links)
        lengths[self.gamma_slots[:-1]] = params.l
        lengths[self.delta_slots] = params.L
        lengths[-1] = params.l_ee
        cg_off = np.empty(self.n_links)
        cg_off[self.gamma_slots[:-1]] = params.l_cg
        cg_off[self.delta_slots] = params.L_cg
        cg_off[-1] = params.l_cg_ee
        masses = np.empty(self.n_links)
        masses[self.gamma_slots[:-1]] = params.m
        masses[self.delta_slots] = params.M
        masses[-1] = params.m_ee
        self.lengths = lengths
        self.cg_off = cg_off
        self.masses = masses
        idx = np.arange(n)
        self.max_idx = np.maximum.outer(idx, idx)


def _workspace(params: ChainParams) -> _SolverWorkspace:
    # Cached on the params instance; params are treated as immutable after
    # construction.
    ws = getattr(params, "_solver_ws", None)
    if ws is None:
        ws = _SolverWorkspace(params)
        params._solver_ws = ws
    return ws


def _residual_and_jacobian(params, ws, angles, contact, Ke, active):
    """Flexibility residual and its delta-Jacobian, condensed evaluation.

    The contact activity is supplied by the caller (frozen within a Newton
    branch).  All second-derivative terms reduce to dot products against
    the joint position of the later flexible joint of each pair, so the
    Jacobian assembles from two scalar arrays indexed by max(i, j).
    """
    ds = ws.delta_slots
    phi = np.cumsum(angles)
    u = np.empty((2, ws.n_links))
    u[0] = np.cos(phi)
    u[1] = np.sin(phi)
    seg = ws.lengths * u
    ends = np.cumsum(seg, axis=1)
    p = ends[:, -1]
    joint_pos = np.empty((2, ws.n_links))
    joint_pos[:, 0] = 0.0
    joint_pos[:, 1:] = ends[:, :-1]
    link_cg = joint_pos + ws.cg_off * u

    # Suffix sums over links at and after each slot.
    mass_cg = ws.masses * link_cg
    s0 = np.cumsum(ws.masses[::-1])[::-1]
    s1 = np.cumsum(mass_cg[:, ::-1], axis=1)[:, ::-1]

    a_d = joint_pos[:, ds]
    rel_p = p[:, None] - a_d
    rel_cg = s1[:, ds] - s0[ds] * a_d

    f = Ke @ (p - contact.p_s) if active else np.zeros(2)

    g0 = params.g0
    delta = angles[ds]
    # cross(v, w) = v_x w_y - v_y w_x gives perp(v) . w
    residual = (params.k * delta
                + rel_p[0] * f[1] - rel_p[1] * f[0]
                - (rel_cg[0] * g0[1] - rel_cg[1] * g0[0]))

    w = rel_p[0] * f[0] + rel_p[1] * f[1]
    v = rel_cg[0] * g0[0] + rel_cg[1] * g0[1]
    jac = np.diag(params.k) + (v - w)[ws.max_idx]
    if active:
        Jp_delta = np.empty((2, len(ds)))
        Jp_delta[0] = -rel_p[1]
        Jp_delta[1] = rel_p[0]
        jac += Jp_delta.T @ Ke @ Jp_delta
    return residual, jac, p, f


def _ee_position(ws, angles):
    phi = np.cumsum(angles)
    return np.array([ws.lengths @ np.cos(phi), ws.lengths @ np.sin(phi)])


def _newton_branch(params, ws, angles, delta, contact, Ke, active, tol,
                   max_iter):
    """Newton on the balance with contact activity frozen.

    Returns (delta, converged); the caller checks branch consistency.
    """
    step_size = np.inf
    for _ in range(max_iter):
        angles[ws.delta_slots] = delta
        residual, jac, _, _ = _residual_and_jacobian(params, ws, angles,
                                                     contact, Ke, active)
        try:
            step = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError:
            return delta, False
        step_size = np.max(np.abs(step))
        if step_size > _MAX_NEWTON_STEP:
            step *= _MAX_NEWTON_STEP / step_size
        delta = delta + step
        if step_size < tol:
            return delta, True
    return delta, False


# Consistency slack at the interface: a branch solution may graze the
# boundary by this much (spurious force <= k_e * slack, well under any
# tolerance in use).
_BRANCH_TOL = 1e-12


def settle(params: ChainParams, gamma: np.ndarray,
           contact: ContactParams | None = None,
           delta0: np.ndarray | None = None,
           tol: float = SOLVE_TOL,
           max_iter: int = SOLVE_MAX_ITER) -> tuple[np.ndarray, bool]:
    """Solve the pseudo-static flexibility balance for delta at given gamma.

    Active-set strategy: the unilateral force law is resolved by solving
    the balance with the contact activity frozen (Newton with an analytic
    Jacobian) and keeping the branch whose solution lands on the correct
    side of the interface.  Re-deciding activity inside the iteration
    chatters whenever a step briefly crosses the boundary, so the
    in-contact and free branches are tried in the order suggested by the
    warm start instead.

    Near grazing with the tangential spring stretched, a narrow band of
    configurations admits no consistent static branch at all: the pressed
    solution ends slightly separated while the free solution slightly
    overlaps (a quasi-static snap-through).  There the free solution is
    returned -- the interface can push but never pull, so release wins.

    Args:
        params: chain description.
        gamma: actuated angles (N,).
        contact: optional interface; None means free space.
        delta0: warm-start deflection, defaults to zeros.
        tol: update infinity-norm tolerance.
        max_iter: iteration cap per branch.

    Returns:
        (delta, active): the deflection (M,) and whether the interface
        force is engaged in the returned solution.

    Raises:
        DeflectionError: no branch converged.
    """
    gamma = np.asarray(gamma, dtype=float)
    ws = _workspace(params)
    delta = (np.zeros(params.n_flex) if delta0 is None
             else np.array(delta0, dtype=float))

    angles = np.empty(ws.n_links)
    angles[ws.gamma_slots] = gamma

    if contact is None:
        delta, ok = _newton_branch(params, ws, angles, delta, None, None,
                                   False, tol, max_iter)
        if not ok:
            raise DeflectionError(
                f"free-space deflection did not converge at gamma={gamma}; "
                "the joint stiffness is too low for a pseudo-static "
                "treatment at this configuration")
        return delta, False

    Ke = stiffness_matrix(contact.ke_normal, contact.ke_tangential, contact.n)
    angles[ws.delta_slots] = delta
    pen0 = contact.n @ (_ee_position(ws, angles) - contact.p_s)
    order = (True, False) if pen0 <= 0.0 else (False, True)

    free_fallback = None
    for active in order:
        cand, ok = _newton_branch(params, ws, angles, delta.copy(), contact,
                                  Ke, active, tol, max_iter)
        if not ok:
            continue
        angles[ws.delta_slots] = cand
        pen = contact.n @ (_ee_position(ws, angles) - contact.p_s)
        if (pen <= _BRANCH_TOL) if active else (pen >= -_BRANCH_TOL):
            return cand, active
        if not active:
            free_fallback = cand

    if free_fallback is not None:
        return free_fallback, False

    raise DeflectionError(
        f"deflection balance did not converge on either contact branch at "
        f"gamma={gamma}; the joint stiffness is too low for a pseudo-static "
        "treatment at this configuration")


def solve_static_deflection(params: ChainParams, gamma: np.ndarray,
                            contact: ContactParams | None = None,
                            delta0: np.ndarray | None = None,
                            tol: float = SOLVE_TOL,
                            max_iter: int = SOLVE_MAX_ITER) -> np.ndarray:
    """Deflection-only variant of :func:`settle`."""
    delta, _ = settle(params, gamma, contact, delta0, tol, max_iter)
    return delta


def compute_Jfg(jacs: JacobianSet, contact: ContactParams, p: np.ndarray,
                m_total: float, g0: np.ndarray,
                active: bool | None = None) -> np.ndarray:
    """Compound force/gravity Jacobian J_fg (3M x N).

    Stacked blocks, top to bottom: normal-force block, tangential-force
    block, gravity block.  Column j of the force blocks collects the two
    frozen-deflection contributions to d/dt(-Jp_delta^T f) from gamma_j,
    split by interface direction; column j of the gravity block is the
    derivative of the gravity torque with respect to gamma_j.  Contracting
    with -Theta^T reproduces the deflection-rate estimate.

    Out of contact the interface force is identically zero, so the force
    blocks vanish and only the gravity block drives the deflection.

    Args:
        jacs: Jacobian set at the current state.
        contact: interface parameters (only the geometry n, p_s enters).
        p: current end-effector position (2,).
        m_total: total chain mass (kg).
        g0: gravity acceleration vector (2,).
        active: override the penetration test n^T (p - p_s) <= 0.

    Returns:
        J_fg with shape (3M, N).
    """
    n_act = jacs.Jp_gamma.shape[1]
    n_flex = jacs.Jp_delta.shape[1]
    if active is None:
        active = penetration(p, contact) <= 0.0

    out = np.empty((3 * n_flex, n_act))
    if active:
        # With unit n the projector contractions reduce to rank-1 pieces:
        # Jp_delta^T n n^T x = (Jp_delta^T n)(n^T x); the third-order stacks
        # only ever appear contracted against a fixed xy vector.
        n = contact.n
        d = p - contact.p_s
        Nn_d = (n[0] * d[0] + n[1] * d[1]) * n
        Nt_d = d - Nn_d
        T_n = jacs.contract_dJp_delta(Nn_d)
        T_t = jacs.contract_dJp_delta(Nt_d)
        Jpd_n = jacs.Jp_delta.T @ n
        n_Jg = n @ jacs.Jp_gamma
        outer_nn = Jpd_n[:, None] * n_Jg[None, :]
        JJ = jacs.Jp_delta.T @ jacs.Jp_gamma
        out[:n_flex] = -T_n.T - outer_nn
        out[n_flex:2 * n_flex] = -T_t.T - (JJ - outer_nn)
    else:
        out[:2 * n_flex] = 0.0
    gx, gy = m_total * g0[0], m_total * g0[1]
    if gx == 0.0 and gy == 0.0:
        out[2 * n_flex:] = 0.0
    else:
        out[2 * n_flex:] = jacs.contract_dJcg_delta((gx, gy)).T
    return out


def theta_from(k_flex: np.ndarray, ke_normal: float,
               ke_tangential: float) -> np.ndarray:
    """Parameter matrix Theta (3M x M) from joint and interface stiffnesses.

    Theta^T has block-column structure
    [-ke_normal K^-1 | -ke_tangential K^-1 | -K^-1] with K = diag(k_flex).
    """
    k_inv = 1.0 / np.asarray(k_flex, dtype=float)
    theta_t = np.hstack((np.diag(-ke_normal * k_inv),
                         np.diag(-ke_tangential * k_inv),
                         np.diag(-k_inv)))
    return theta_t.T


def delta_rate_estimate(theta: np.ndarray, Jfg: np.ndarray,
                        gamma_dot: np.ndarray) -> np.ndarray:
    """Deflection-rate estimate -Theta^T J_fg gamma_dot."""
    return -theta.T @ (Jfg @ gamma_dot)


def estimated_task_jacobian(jacs: JacobianSet, theta: np.ndarray,
                            Jfg: np.ndarray) -> np.ndarray:
    """Flexibility-corrected task Jacobian J_T = J_gamma - J_delta Theta^T J_fg.

    Maps actuated joint rates to task rates while accounting for the induced
    deflection motion; shape (S, N).
    """
    return jacs.J_gamma - jacs.J_delta @ (theta.T @ Jfg)
