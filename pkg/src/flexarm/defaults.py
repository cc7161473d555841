"""Benchmark arm constants and tuned gains.

Numbers follow the bench datasheet conventions: lengths in cm and masses in
g (converted to SI on construction), joint stiffness in N*m/rad, controller
gains dimensionless in SI task units.
"""

from __future__ import annotations

import numpy as np

from .adaptation import AdaptiveState
from .chain import ChainParams, GRAVITY_DEFAULT
from .controller import Gains

# Arm geometry/inertia, bench-sheet units (cm, g).
LINK_L_CM = 4.8
LINK_BIG_L_CM = 6.2
LINK_L_CG_CM = 2.4
LINK_BIG_L_CG_CM = 3.6
LINK_MASS_G = 25.0
LINK_BIG_MASS_G = 64.0
FLEX_STIFFNESS = 0.8  # N*m/rad
EE_L_CM = 12.0
EE_L_CG_CM = 6.0
EE_MASS_G = 72.0
N_PAIRS = 3

# Controller gains (task axes: x, y, orientation).
KP_POS = 0.5949
KP_ORI = 0.0214
KI_POS = 0.1610
KI_ORI = 0.0024
KXI = 0.12
K_GAMMA = (209.9, 220.5, 241.4, 283.4)
K_ETA = 20.0
SIGMA_P = 0.3
ETA_T_DEFAULT = 0.1  # N

# Adaptation gains: three values for the normal-force block rows, three
# shared by the tangential-force and gravity block rows.
GAMMA_THETA_NORMAL = (257.1, 1929.0, 3857.0)
GAMMA_THETA_SHARED = (51.43, 385.7, 771.4)
GAMMA_KE = (0.0040, 0.0020)
KE_BOUNDS = (0.0040, 0.0120)
PROJ_BETA = 0.4


def benchmark_chain(g0=GRAVITY_DEFAULT) -> ChainParams:
    """Benchmark arm: three compound joints plus the end-effector link."""
    ones = np.ones(N_PAIRS)
    return ChainParams.from_table_units(
        l_cm=LINK_L_CM * ones, L_cm=LINK_BIG_L_CM * ones,
        l_cg_cm=LINK_L_CG_CM * ones, L_cg_cm=LINK_BIG_L_CG_CM * ones,
        m_g=LINK_MASS_G * ones, M_g=LINK_BIG_MASS_G * ones,
        k_nm_rad=FLEX_STIFFNESS * ones,
        l_ee_cm=EE_L_CM, l_cg_ee_cm=EE_L_CG_CM, m_ee_g=EE_MASS_G,
        g0=g0,
    )


def benchmark_gains(eta_t: float = ETA_T_DEFAULT) -> Gains:
    """Tuned controller gains for the benchmark arm."""
    return Gains(
        K_P=np.array([KP_POS, KP_POS, KP_ORI]),
        K_I=np.array([KI_POS, KI_POS, KI_ORI]),
        K_xi=np.full(3, KXI),
        K_gamma=np.array(K_GAMMA),
        K_eta=np.full(4, K_ETA),
        sigma_p=SIGMA_P,
        eta_t=eta_t,
    )


def gamma_theta_diag(values6=None) -> np.ndarray:
    """Expand the six tuned adaptation gains to the 3M-long diagonal.

    The first three cover the normal-force block rows; the second three are
    used for both the tangential-force and the gravity block rows.  A
    nine-entry vector passes through unchanged.
    """
    if values6 is None:
        values6 = GAMMA_THETA_NORMAL + GAMMA_THETA_SHARED
    values6 = np.asarray(values6, dtype=float)
    if values6.shape == (9,):
        return values6
    if values6.shape != (6,):
        raise ValueError("expected 6 or 9 adaptation gain values")
    return np.concatenate((values6[:3], values6[3:], values6[3:]))


def benchmark_adaptation(params: ChainParams | None = None,
                         ke_hat0=None) -> AdaptiveState:
    """Seeded adaptive estimates for the benchmark arm."""
    if params is None:
        params = benchmark_chain()
    return AdaptiveState.initialise(
        k_flex=params.k,
        gamma_theta=gamma_theta_diag(),
        gamma_ke=np.array(GAMMA_KE),
        ke_min=np.full(2, KE_BOUNDS[0]),
        ke_max=np.full(2, KE_BOUNDS[1]),
        beta=PROJ_BETA,
        ke_hat0=ke_hat0,
    )
