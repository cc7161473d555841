"""Adaptive moduli and deflection-parameter updates with projection."""

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from flexarm.adaptation import (AdaptiveState, integrate_adaptation,
                                ke_raw_rates, ke_update, proj, rho, rho_grad,
                                theta_update)
from flexarm.flex import theta_from

LO, HI, BETA = 0.0040, 0.0120, 0.4
CEN, RAD = 0.5 * (HI + LO), 0.5 * (HI - LO)

kappa_in_bounds = st.floats(LO, HI)
rates = st.floats(-1e-3, 1e-3, allow_nan=False)


def test_rho_closed_forms():
    assert rho(CEN, LO, HI, BETA) == pytest.approx(-0.19047619047619052,
                                                   rel=1e-14)
    assert rho(HI, LO, HI, BETA) == pytest.approx(1.0, abs=1e-14)
    assert rho(LO, LO, HI, BETA) == pytest.approx(1.0, abs=1e-14)
    # the safe core ends where rho crosses zero, at centre + beta*radius
    assert abs(rho(CEN + BETA * RAD, LO, HI, BETA)) < 1e-12
    assert rho(0.0108, LO, HI, BETA) == pytest.approx(0.39285714285714307,
                                                      rel=1e-13)


def test_rho_grad_matches_fd():
    h = 1e-9
    for kap in (0.005, CEN, 0.0105, HI):
        fd = (rho(kap + h, LO, HI, BETA) - rho(kap - h, LO, HI, BETA)) / (2 * h)
        assert rho_grad(kap, LO, HI, BETA) == pytest.approx(fd, rel=1e-5)
    assert rho_grad(CEN, LO, HI, BETA) == 0.0


def test_proj_regions():
    rate = 2.5e-4
    # inner region: pass-through both directions
    assert proj(rate, CEN, LO, HI, BETA) == rate
    assert proj(-rate, CEN, LO, HI, BETA) == -rate
    # boundary layer, outward: scaled by (1 - rho)
    scaled = proj(rate, 0.0108, LO, HI, BETA)
    assert scaled == pytest.approx(rate * (1.0 - 0.39285714285714307),
                                   rel=1e-12)
    # boundary layer, inward: untouched
    assert proj(-rate, 0.0108, LO, HI, BETA) == -rate
    # on the bound, outward: exactly zero
    assert proj(rate, HI, LO, HI, BETA) == 0.0
    assert proj(-rate, LO, LO, HI, BETA) == 0.0
    # on the bound, inward: untouched
    assert proj(-rate, HI, LO, HI, BETA) == -rate


@given(kap=kappa_in_bounds, rate=rates)
def test_proj_shrinks_never_flips(kap, rate):
    out = proj(rate, kap, LO, HI, BETA)
    assert abs(out) <= abs(rate)
    assert out * rate >= 0.0


@given(kap=kappa_in_bounds, kstar=kappa_in_bounds, rate=rates)
def test_proj_never_hurts_parameter_energy(kap, kstar, rate):
    # for any target in the safe core, the projection can only reduce the
    # growth of (kappa - kstar) * d kappa/dt
    assume(rho(kstar, LO, HI, BETA) <= 0.0)
    raw_drift = (kap - kstar) * rate
    proj_drift = (kap - kstar) * proj(rate, kap, LO, HI, BETA)
    assert proj_drift <= raw_drift + 1e-24


def bench_adapt():
    return AdaptiveState.initialise(
        k_flex=np.full(3, 0.8),
        gamma_theta=np.array([257.1, 1929.0, 3857.0,
                              51.43, 385.7, 771.4,
                              51.43, 385.7, 771.4]),
        gamma_ke=np.array([0.0040, 0.0020]),
        ke_min=np.full(2, LO), ke_max=np.full(2, HI), beta=BETA)


def test_initialise_midpoint():
    ad = bench_adapt()
    np.testing.assert_array_equal(ad.ke_hat, [CEN, CEN])
    np.testing.assert_array_equal(ad.theta_hat,
                                  theta_from(np.full(3, 0.8), CEN, CEN))


def test_initialise_rejects_out_of_bounds():
    with pytest.raises(ValueError):
        AdaptiveState.initialise(
            k_flex=np.full(3, 0.8), gamma_theta=np.ones(9),
            gamma_ke=np.ones(2), ke_min=np.full(2, LO),
            ke_max=np.full(2, HI), ke_hat0=np.array([0.02, CEN]))
    with pytest.raises(ValueError):
        AdaptiveState.initialise(
            k_flex=np.full(3, 0.8), gamma_theta=np.ones(9),
            gamma_ke=np.ones(2), ke_min=np.full(2, HI),
            ke_max=np.full(2, LO))


JP = np.array([[-0.12, 0.06, -0.03, 0.04],
               [0.10, 0.11, 0.09, 0.02]])
GDOT = np.array([0.4, -0.3, 0.2, 0.1])
N_VEC = np.array([0.0, -1.0])


def test_ke_raw_rates_frozen():
    rates_ = ke_raw_rates(np.array([0.3, -0.2]), JP, GDOT,
                          np.array([0.0040, 0.0020]), N_VEC)
    np.testing.assert_allclose(rates_, [2.1600000000000003e-05, 4.08e-05],
                               rtol=1e-13)


def test_ke_raw_rates_scalar_oracle():
    rng = np.random.default_rng(21)
    for _ in range(20):
        eta = rng.normal(scale=0.4, size=2)
        jp = rng.normal(scale=0.2, size=(2, 4))
        gd = rng.normal(size=4)
        gke = rng.uniform(0.001, 0.01, 2)
        phi = rng.uniform(0, 2 * np.pi)
        n = np.array([np.cos(phi), np.sin(phi)])
        pd = [sum(jp[a][j] * gd[j] for j in range(4)) for a in range(2)]
        vn = n[0] * pd[0] + n[1] * pd[1]
        en = n[0] * eta[0] + n[1] * eta[1]
        expect = [-gke[0] * en * vn,
                  -gke[1] * (eta[0] * pd[0] + eta[1] * pd[1] - en * vn)]
        np.testing.assert_allclose(ke_raw_rates(eta, jp, gd, gke, n), expect,
                                   rtol=1e-11, atol=1e-18)


def test_zero_inputs_give_bitwise_zero_rates():
    ad = bench_adapt()
    z2, z3, z4 = np.zeros(2), np.zeros(3), np.zeros(4)
    np.testing.assert_array_equal(
        ke_raw_rates(z2, JP, GDOT, ad.gamma_ke, N_VEC), z2)
    np.testing.assert_array_equal(
        ke_update(ad, z2, JP, GDOT, N_VEC), z2)
    Jfg = np.ones((9, 4))
    assert np.all(theta_update(ad, Jfg, z4, np.array([0.1, 0.2, 0.3]),
                               np.full(3, 0.5949), np.ones((3, 3))) == 0.0)
    assert np.all(theta_update(ad, Jfg, GDOT, z3, np.full(3, 0.5949),
                               np.ones((3, 3))) == 0.0)


def test_theta_update_is_rank_one():
    ad = bench_adapt()
    rng = np.random.default_rng(33)
    Jfg = rng.normal(size=(9, 4))
    e = rng.normal(size=3)
    J_delta = rng.normal(size=(3, 3))
    K_P = np.array([0.5949, 0.5949, 0.0214])
    rate = theta_update(ad, Jfg, GDOT, e, K_P, J_delta)
    assert rate.shape == (9, 3)
    assert np.linalg.matrix_rank(rate) == 1
    left = ad.gamma_theta * (Jfg @ GDOT)
    right = (K_P * e) @ J_delta
    np.testing.assert_allclose(rate, np.outer(left, right), rtol=1e-12)


def test_integrate_clips_to_bounds():
    ad = bench_adapt()
    integrate_adaptation(ad, np.zeros((9, 3)), np.array([1.0, -1.0]), 1.0)
    np.testing.assert_array_equal(ad.ke_hat, [HI, LO])
    # theta integrates plain Euler
    ad2 = bench_adapt()
    theta0 = ad2.theta_hat.copy()
    rate = np.full((9, 3), 2.0)
    integrate_adaptation(ad2, rate, np.zeros(2), 0.025)
    np.testing.assert_allclose(ad2.theta_hat, theta0 + 0.05, rtol=0, atol=0)


@given(kap0=st.floats(LO + 1e-6, HI - 1e-6),
       rate=st.floats(-10.0, 10.0, allow_nan=False))
def test_bounds_invariant_under_integration(kap0, rate):
    ad = AdaptiveState.initialise(
        k_flex=np.full(3, 0.8), gamma_theta=np.ones(9),
        gamma_ke=np.ones(2), ke_min=np.full(2, LO), ke_max=np.full(2, HI),
        ke_hat0=np.array([kap0, kap0]))
    for _ in range(5):
        projected = np.array([
            proj(rate, float(ad.ke_hat[0]), LO, HI, BETA),
            proj(-rate, float(ad.ke_hat[1]), LO, HI, BETA)])
        integrate_adaptation(ad, np.zeros((9, 3)), projected, 0.025)
        assert np.all(ad.ke_hat >= LO) and np.all(ad.ke_hat <= HI)


def test_copy_isolated():
    ad = bench_adapt()
    c = ad.copy()
    c.ke_hat[0] = HI
    assert ad.ke_hat[0] == CEN
