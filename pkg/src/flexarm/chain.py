"""Kinematics of a planar serial chain with alternating actuated and flexible joints.

The chain is built from ``n_pairs`` compound joints (one actuated revolute
joint followed by a short link, then one flexible revolute joint followed by
a longer link) plus a final actuated joint carrying the end-effector link.
For the benchmark arm ``n_pairs = 3``, so there are N = 4 actuated angles
``gamma`` and M = 3 flexible angles ``delta``.

Task coordinates are q = (p_x, p_y, alpha) with p the end-effector position
and alpha the absolute end-effector orientation, which for a planar chain is
the plain sum of all joint angles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

GRAVITY_DEFAULT = (0.0, -9.81)


@dataclass
class ChainParams:
    """Geometric and inertial description of the arm, all in SI units.

    Per compound joint i the first (actuated-side) link has length ``l[i]``,
    centre of gravity offset ``l_cg[i]`` and mass ``m[i]``; the second
    (flexible-side) link has ``L[i]``, ``L_cg[i]`` and ``M[i]``.  ``k[i]`` is
    the torsional stiffness of flexible joint i in N*m/rad.  The end-effector
    link hangs off the last actuated joint.
    """

    l: np.ndarray
    L: np.ndarray
    l_cg: np.ndarray
    L_cg: np.ndarray
    m: np.ndarray
    M: np.ndarray
    k: np.ndarray
    l_ee: float
    l_cg_ee: float
    m_ee: float
    g0: np.ndarray = field(default_factory=lambda: np.array(GRAVITY_DEFAULT))

    def __post_init__(self):
        for name in ("l", "L", "l_cg", "L_cg", "m", "M", "k", "g0"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.l)
        for name in ("L", "l_cg", "L_cg", "m", "M", "k"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have length {n}")
        if np.any(self.k <= 0.0):
            raise ValueError("flexible joint stiffness must be positive")
        if self.g0.shape != (2,):
            raise ValueError("g0 must be a 2-vector")

    @property
    def n_pairs(self) -> int:
        return len(self.l)

    @property
    def n_act(self) -> int:
        """Number of actuated joints N."""
        return self.n_pairs + 1

    @property
    def n_flex(self) -> int:
        """Number of flexible joints M."""
        return self.n_pairs

    @property
    def m_total(self) -> float:
        return float(np.sum(self.m) + np.sum(self.M) + self.m_ee)

    @property
    def stiffness(self) -> np.ndarray:
        """Diagonal flexibility stiffness matrix K (M x M)."""
        return np.diag(self.k)

    @classmethod
    def from_table_units(cls, l_cm, L_cm, l_cg_cm, L_cg_cm, m_g, M_g,
                         k_nm_rad, l_ee_cm, l_cg_ee_cm, m_ee_g,
                         g0=GRAVITY_DEFAULT) -> "ChainParams":
        """Build params from bench-sheet units (cm for lengths, g for masses)."""
        cm = 1e-2
        g = 1e-3
        return cls(
            l=np.asarray(l_cm, dtype=float) * cm,
            L=np.asarray(L_cm, dtype=float) * cm,
            l_cg=np.asarray(l_cg_cm, dtype=float) * cm,
            L_cg=np.asarray(L_cg_cm, dtype=float) * cm,
            m=np.asarray(m_g, dtype=float) * g,
            M=np.asarray(M_g, dtype=float) * g,
            k=np.asarray(k_nm_rad, dtype=float),
            l_ee=float(l_ee_cm) * cm,
            l_cg_ee=float(l_cg_ee_cm) * cm,
            m_ee=float(m_ee_g) * g,
            g0=np.asarray(g0, dtype=float),
        )


@dataclass
class JointState:
    """Joint angles: gamma (N,) actuated, delta (M,) flexible, radians."""

    gamma: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.delta = np.asarray(self.delta, dtype=float)

    def copy(self) -> "JointState":
        return JointState(self.gamma.copy(), self.delta.copy())


@dataclass
class TaskPose:
    """End-effector position p (2,) and absolute orientation alpha (rad)."""

    p: np.ndarray
    alpha: float

    @property
    def q(self) -> np.ndarray:
        """Stacked task vector (p_x, p_y, alpha)."""
        return np.array([self.p[0], self.p[1], self.alpha])


class JacobianSet:
    """Analytic Jacobian blocks of the task map at one joint state.

    ``J`` is the full S x (N+M) task Jacobian with columns ordered as all
    actuated angles first, then all flexible angles, so J = [J_gamma | J_delta].
    ``Jp_*`` are the position rows, ``Jalpha_*`` the orientation row (all
    ones for a planar chain).  ``J_cg_delta`` is the Jacobian of the
    total-mass-weighted centre of gravity with respect to delta.

    ``dJp_delta_dgamma`` and ``dJcg_delta_dgamma`` hold the third-order
    terms as N slices (one per actuated angle) of 2 x M matrices:
    slice j is the elementwise derivative of the corresponding block with
    respect to gamma_j.  They and the CG block derive lazily from the
    stored geometry; the control path contracts them against fixed
    xy-vectors instead (see :meth:`contract_dJp_delta`), which never
    materializes the stacks.
    """

    __slots__ = ("J", "J_gamma", "J_delta", "Jp_gamma", "Jp_delta",
                 "Jalpha_gamma", "Jalpha_delta", "_geo", "_tb", "_anchors",
                 "_mcg", "_later_gd", "_jcg", "_djp", "_djcg")

    def __init__(self, J, anchors, geo, tb):
        n_act = len(tb.gamma_slots)
        self.J = J
        self.J_gamma = J[:, :n_act]
        self.J_delta = J[:, n_act:]
        self.Jp_gamma = J[:2, :n_act]
        self.Jp_delta = J[:2, n_act:]
        self.Jalpha_gamma = J[2:3, :n_act]
        self.Jalpha_delta = J[2:3, n_act:]
        self._geo = geo
        self._tb = tb
        self._anchors = anchors
        self._mcg = None
        self._later_gd = None
        self._jcg = None
        self._djp = None
        self._djcg = None

    def _mcg_suffix(self):
        """Suffix sums of mass-weighted link CG positions: column s collects
        every link at or after chain slot s."""
        if self._mcg is None:
            geo = self._geo
            self._mcg = np.cumsum((geo.masses * geo.link_cg)[:, ::-1],
                                  axis=1)[:, ::-1]
        return self._mcg

    def _later(self):
        """Positions of max(gamma_slot_j, delta_slot_i), shape (2, N, M)."""
        if self._later_gd is None:
            self._later_gd = self._geo.joint_pos[:, self._tb.mx_gd]
        return self._later_gd

    @property
    def J_cg_delta(self):
        # CG of "everything a flexible joint moves" via one suffix lookup;
        # link k moves with flexible joint d iff d's slot <= k.
        if self._jcg is None:
            geo, tb = self._geo, self._tb
            mt = geo.m_total
            swung = (self._mcg_suffix()[:, tb.delta_slots]
                     - self._anchors[:, len(tb.gamma_slots):] * tb.msum_ds)
            out = np.empty_like(swung)
            np.divide(swung[1], -mt, out=out[0])
            np.divide(swung[0], mt, out=out[1])
            self._jcg = out
        return self._jcg

    @property
    def dJp_delta_dgamma(self):
        if self._djp is None:
            self._djp = (self._later()
                         - self._geo.p[:, None, None]).transpose(1, 0, 2)
        return self._djp

    @property
    def dJcg_delta_dgamma(self):
        if self._djcg is None:
            tb = self._tb
            self._djcg = ((self._later() * tb.msum_gd
                           - self._mcg_suffix()[:, tb.mx_gd])
                          / self._geo.m_total).transpose(1, 0, 2)
        return self._djcg

    def contract_dJp_delta(self, w) -> np.ndarray:
        """Sum_xy w[xy] * dJp_delta_dgamma[:, xy, :] without the stack.

        Args:
            w: xy weight vector (2,).

        Returns:
            (N, M) array; entry (j, i) is w . d(Jp_delta[:, i])/d(gamma_j).
        """
        later = self._later()
        p = self._geo.p
        return (w[0] * later[0] + w[1] * later[1]
                - (w[0] * p[0] + w[1] * p[1]))

    def contract_dJcg_delta(self, w) -> np.ndarray:
        """Sum_xy w[xy] * dJcg_delta_dgamma[:, xy, :] without the stack."""
        tb = self._tb
        later = self._later()
        mcg = self._mcg_suffix()[:, tb.mx_gd]
        num = (w[0] * (later[0] * tb.msum_gd - mcg[0])
               + w[1] * (later[1] * tb.msum_gd - mcg[1]))
        return num / self._geo.m_total


def _perp(v):
    """Rotate a 2-vector (or 2xK array of columns) by +90 degrees."""
    return np.stack((-v[1], v[0]))


class _Geometry:
    """Joint positions and link CG positions of the chain at one state.

    Attributes use chain order: entry j is the j-th joint / the link that
    follows it.  Actuated joints sit at chain slots 0, 2, ..., 2*n_pairs;
    flexible joints at 1, 3, ..., 2*n_pairs - 1.  ``link_cg`` derives on
    first use; the control path only touches it under non-zero gravity.
    """

    __slots__ = ("joint_pos", "p", "alpha", "gamma_slots", "delta_slots",
                 "masses", "m_total", "_cg_off", "_u", "_link_cg")

    def __init__(self, joint_pos, p, alpha, gamma_slots, delta_slots,
                 masses, m_total, cg_off, u):
        self.joint_pos = joint_pos
        self.p = p
        self.alpha = alpha
        self.gamma_slots = gamma_slots
        self.delta_slots = delta_slots
        self.masses = masses
        self.m_total = m_total
        self._cg_off = cg_off
        self._u = u
        self._link_cg = None

    @property
    def link_cg(self):
        if self._link_cg is None:
            self._link_cg = self.joint_pos + self._cg_off * self._u
        return self._link_cg


@lru_cache(maxsize=8)
def _slots(n_pairs):
    gamma_slots = np.arange(0, 2 * n_pairs + 1, 2)
    delta_slots = np.arange(1, 2 * n_pairs, 2)
    return gamma_slots, delta_slots


@lru_cache(maxsize=8)
def _later_slot(n_pairs):
    """max(slot_i, slot_j) index grids for the second-derivative tensors."""
    gs, ds = _slots(n_pairs)
    return np.maximum(gs[:, None], ds[None, :]), np.maximum(ds[:, None],
                                                            ds[None, :])


class _Tables:
    """State-independent link arrays in chain order, cached per params."""

    __slots__ = ("gamma_slots", "delta_slots", "lengths", "cg_off", "masses",
                 "perm", "msum", "msum_ds", "mx_gd", "mx_dd", "msum_gd",
                 "msum_dd")

    def __init__(self, params: ChainParams):
        n = params.n_pairs
        n_links = 2 * n + 1
        self.gamma_slots, self.delta_slots = _slots(n)
        self.lengths = np.empty(n_links)
        self.lengths[self.gamma_slots[:-1]] = params.l
        self.lengths[self.delta_slots] = params.L
        self.lengths[-1] = params.l_ee
        self.cg_off = np.empty(n_links)
        self.cg_off[self.gamma_slots[:-1]] = params.l_cg
        self.cg_off[self.delta_slots] = params.L_cg
        self.cg_off[-1] = params.l_cg_ee
        self.masses = np.empty(n_links)
        self.masses[self.gamma_slots[:-1]] = params.m
        self.masses[self.delta_slots] = params.M
        self.masses[-1] = params.m_ee
        # Columns of J are gamma first, then delta.
        self.perm = np.concatenate((self.gamma_slots, self.delta_slots))
        # Suffix mass sums: msum[s] is everything at or after chain slot s.
        self.msum = np.cumsum(self.masses[::-1])[::-1]
        self.msum_ds = self.msum[self.delta_slots]
        self.mx_gd, self.mx_dd = _later_slot(n)
        self.msum_gd = self.msum[self.mx_gd]
        self.msum_dd = self.msum[self.mx_dd]


def _link_tables(params: ChainParams) -> _Tables:
    """Cached link tables; params are treated as immutable after construction."""
    tables = getattr(params, "_link_cache", None)
    if tables is None:
        tables = _Tables(params)
        params._link_cache = tables
    return tables


def chain_geometry(params: ChainParams, state: JointState) -> _Geometry:
    """Compute joint positions, link CG positions and the EE pose in one pass."""
    tb = _link_tables(params)
    n_links = tb.lengths.shape[0]

    angles = np.empty(n_links)
    angles[tb.gamma_slots] = state.gamma
    angles[tb.delta_slots] = state.delta

    phi = np.cumsum(angles)
    u = np.empty((2, n_links))
    np.cos(phi, out=u[0])
    np.sin(phi, out=u[1])
    seg = tb.lengths * u
    # One panel holds the base plus every link end; joint j sits at the end
    # of link j-1, so joint positions and the EE are views into it.
    panel = np.empty((2, n_links + 1))
    panel[:, 0] = 0.0
    np.cumsum(seg, axis=1, out=panel[:, 1:])

    return _Geometry(panel[:, :-1], panel[:, -1], float(phi[-1]),
                     tb.gamma_slots, tb.delta_slots, tb.masses,
                     params.m_total, tb.cg_off, u)


def forward_kinematics(params: ChainParams, state: JointState) -> TaskPose:
    """End-effector pose of the chain.

    Args:
        params: chain description.
        state: joint angles.

    Returns:
        TaskPose with p (2,) in metres and alpha in radians.  alpha equals
        the exact sum of all actuated and flexible angles.
    """
    geo = chain_geometry(params, state)
    return TaskPose(geo.p, geo.alpha)


def center_of_mass(params: ChainParams, state: JointState):
    """Total-mass-weighted centre of gravity.

    Returns:
        (cg, m_total): cg is the 2-vector CG position, m_total the summed
        link mass in kg.
    """
    geo = chain_geometry(params, state)
    cg = geo.link_cg @ geo.masses / geo.m_total
    return cg, geo.m_total


def jacobians(params: ChainParams, state: JointState,
              geo: _Geometry | None = None) -> JacobianSet:
    """Analytic task Jacobians and the third-order slices used downstream.

    Every revolute joint contributes a position column perp(p - a_j) with
    a_j the joint position, and a constant 1 in the orientation row.  The
    second derivatives follow from the same rule applied twice: for two
    joints both ahead of a point x, d2x/dtheta_i dtheta_j = -(x - a_m) with
    a_m the position of whichever joint sits later along the chain.

    Args:
        params: chain description.
        state: joint angles.
        geo: optional precomputed geometry for this state (perf path).

    Returns:
        JacobianSet at the given state.
    """
    if geo is None:
        geo = chain_geometry(params, state)
    tb = _link_tables(params)

    # Assemble J = [J_gamma | J_delta] in place; the named blocks are views.
    # Revolute column: perp(p - a_j); orientation row: all ones.
    p = geo.p
    anchors = geo.joint_pos[:, tb.perm]
    J = np.empty((3, params.n_act + params.n_flex))
    np.subtract(anchors[1], p[1], out=J[0])
    np.subtract(p[0], anchors[0], out=J[1])
    J[2] = 1.0
    return JacobianSet(J, anchors, geo, tb)


def second_derivative_wrt_delta(params: ChainParams, state: JointState,
                                geo: _Geometry | None = None):
    """Slices dJp_delta/ddelta_j and dJcg_delta/ddelta_j (M x 2 x M each).

    Needed by the static deflection solver, which linearises the flexibility
    balance in delta.  Same second-derivative rule as in :func:`jacobians`,
    applied to flexible-flexible joint pairs.
    """
    if geo is None:
        geo = chain_geometry(params, state)
    tb = _link_tables(params)
    mcg = np.cumsum((geo.masses * geo.link_cg)[:, ::-1], axis=1)[:, ::-1]
    later = geo.joint_pos[:, tb.mx_dd]
    dJp = (later - geo.p[:, None, None]).transpose(1, 0, 2)
    dJcg = ((later * tb.msum_dd - mcg[:, tb.mx_dd])
            / geo.m_total).transpose(1, 0, 2)
    return dJp, dJcg


def rank_margin(matrix: np.ndarray) -> float:
    """Smallest singular value, used as a conditioning margin monitor."""
    return float(np.linalg.svd(matrix, compute_uv=False)[-1])
