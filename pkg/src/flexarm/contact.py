"""Elastic contact interface model with separate normal and tangential moduli.

The interface is a line through a rest point ``p_s`` with unit outward
normal ``n``.  While the end-effector penetrates the interface the contact
force is linear elastic, f = K_e (p - p_s), with a normal modulus along n
and a tangential modulus in the orthogonal direction.  The contact is
unilateral: outside the interface f = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ContactParams:
    """Interface description.

    ``ke_normal`` / ``ke_tangential`` are the true elastic moduli in N/m,
    ``n`` the unit outward normal and ``p_s`` the stress-free rest point of
    the interface in metres.
    """

    ke_normal: float
    ke_tangential: float
    n: np.ndarray = field(default_factory=lambda: np.array([0.0, -1.0]))
    p_s: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=float)
        self.p_s = np.asarray(self.p_s, dtype=float)
        norm = np.linalg.norm(self.n)
        if not np.isclose(norm, 1.0, atol=1e-9):
            raise ValueError(f"contact normal must be unit length, got |n|={norm}")
        if self.ke_normal < 0.0 or self.ke_tangential < 0.0:
            raise ValueError("elastic moduli must be non-negative")

    @property
    def ke_pair(self) -> np.ndarray:
        return np.array([self.ke_normal, self.ke_tangential])


def projectors(n: np.ndarray):
    """Normal and tangential projectors (N_normal, N_tangential) of a unit n.

    N_normal = n n^T projects onto the normal direction, N_tangential is its
    orthogonal complement.  They are idempotent, symmetric, and sum to I.
    """
    n = np.asarray(n, dtype=float)
    Nn = np.outer(n, n)
    return Nn, np.eye(2) - Nn


def stiffness_matrix(ke_normal: float, ke_tangential: float,
                     n: np.ndarray) -> np.ndarray:
    """Elastic stiffness K_e = ke_normal * n n^T + ke_tangential * (I - n n^T)."""
    Nn, Nt = projectors(n)
    return ke_normal * Nn + ke_tangential * Nt


def stiffness_determinant(ke_normal: float, ke_tangential: float) -> float:
    """det K_e in closed form: ke_tangential**(S_p - 1) * ke_normal for S_p = 2.

    K_e is a rank-one update of a scaled identity, so its determinant reduces
    to the product of the two moduli in the plane.
    """
    return ke_tangential * ke_normal


def penetration(p: np.ndarray, contact: ContactParams) -> float:
    """Signed distance n^T (p - p_s); non-positive means touching/penetrating."""
    return float(contact.n @ (np.asarray(p) - contact.p_s))


def contact_force(p: np.ndarray, contact: ContactParams,
                  active: bool | None = None) -> np.ndarray:
    """Interface force at end-effector position p.

    Args:
        p: end-effector position (2,).
        contact: interface parameters.
        active: force the activation state; by default it is decided by the
            penetration test n^T (p - p_s) <= 0.

    Returns:
        f (2,), expressed in the world frame with the convention of the
        elastic model: under compression n^T f <= 0.
    """
    p = np.asarray(p, dtype=float)
    if active is None:
        active = penetration(p, contact) <= 0.0
    if not active:
        return np.zeros(2)
    Ke = stiffness_matrix(contact.ke_normal, contact.ke_tangential, contact.n)
    return Ke @ (p - contact.p_s)


def force_rate(Ke: np.ndarray, Jp_gamma: np.ndarray,
               gamma_dot: np.ndarray) -> np.ndarray:
    """Force rate under frozen deflection: f_dot = K_e Jp_gamma gamma_dot."""
    return Ke @ (Jp_gamma @ gamma_dot)
