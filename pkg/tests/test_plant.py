"""Quasi-static plant and its measurement fidelity effects."""

import numpy as np
import pytest

from flexarm.chain import JointState, chain_geometry, forward_kinematics
from flexarm.plant import (FidelityOptions, init_plant, measure, plant_step,
                           SERVO_QUANT_DEFAULT)

GAMMA0 = np.array([2.4668483904431553, -1.2009257827554434,
                   -1.161760221649789, 0.6169103930537735])


def test_init_free_flat(params):
    st = init_plant(params, np.array([0.3, -0.2, 0.1, 0.4]))
    np.testing.assert_array_equal(st.delta, np.zeros(3))
    np.testing.assert_array_equal(st.f_true, np.zeros(2))
    assert st.contact_active is False
    pose = forward_kinematics(params,
                              JointState(st.gamma, st.delta))
    np.testing.assert_array_equal(st.p, pose.p)


def test_init_engages_bench_contact(params, bench_contact):
    st = init_plant(params, GAMMA0, bench_contact)
    assert st.contact_active is True
    # compression: the normal force component opposes the outward normal
    assert bench_contact.n @ st.f_true <= 0.0
    assert np.linalg.norm(st.f_true) > 0.01


def test_step_integrates_command_exactly(params):
    st = init_plant(params, np.array([0.3, -0.2, 0.1, 0.4]))
    cmd = np.array([0.11, -0.07, 0.02, 0.31])
    nxt = plant_step(st, cmd, params, None, 1e-3)
    np.testing.assert_array_equal(nxt.gamma, st.gamma + 1e-3 * cmd)
    assert nxt.t == pytest.approx(st.t + 1e-3, abs=0)


def test_step_tracks_interface_force(params, bench_contact):
    st = init_plant(params, GAMMA0, bench_contact)
    # push along the interface normal: force magnitude must grow
    cmd = np.array([0.05, 0.05, 0.05, 0.05])
    f0 = np.linalg.norm(st.f_true)
    for _ in range(20):
        st = plant_step(st, cmd, params, bench_contact, 1e-3)
    consistent = chain_geometry(params, JointState(st.gamma, st.delta))
    np.testing.assert_allclose(st.p, consistent.p, rtol=0, atol=1e-15)
    assert np.linalg.norm(st.f_true) != f0


def test_measure_exact_when_fidelity_off(params):
    st = init_plant(params, GAMMA0)
    q, f = measure(st, params, FidelityOptions.all_off())
    np.testing.assert_array_equal(q, [st.p[0], st.p[1], st.alpha])
    np.testing.assert_array_equal(f, st.f_true)


def test_measure_quantizes_servo_angles(params):
    st = init_plant(params, GAMMA0)
    opts = FidelityOptions(noise_on=False)
    q, _ = measure(st, params, opts)
    ticks = np.round(st.gamma / SERVO_QUANT_DEFAULT)
    geo = chain_geometry(params,
                         JointState(ticks * SERVO_QUANT_DEFAULT, st.delta))
    np.testing.assert_array_equal(q, [geo.p[0], geo.p[1], geo.alpha])
    # the reconstruction differs from truth unless gamma sits on the lattice
    assert not np.array_equal(q[:2], st.p)


def test_measure_noise_deterministic_per_seed(params):
    st = init_plant(params, GAMMA0)
    opts = FidelityOptions(quantization_on=False)
    _, f1 = measure(st, params, opts, np.random.default_rng(42))
    _, f2 = measure(st, params, opts, np.random.default_rng(42))
    _, f3 = measure(st, params, opts, np.random.default_rng(43))
    np.testing.assert_array_equal(f1, f2)
    assert not np.array_equal(f1, f3)


def test_measure_noise_statistics(params):
    st = init_plant(params, GAMMA0)
    opts = FidelityOptions(quantization_on=False)
    rng = np.random.default_rng(7)
    samples = np.array([measure(st, params, opts, rng)[1]
                        for _ in range(4000)])
    resid = samples - st.f_true
    assert abs(resid.mean()) < 0.002
    assert resid.std() == pytest.approx(0.02, rel=0.1)


def test_measure_requires_rng_for_noise(params):
    st = init_plant(params, GAMMA0)
    with pytest.raises(ValueError):
        measure(st, params, FidelityOptions(quantization_on=False))


def test_fidelity_switches():
    off = FidelityOptions.all_off()
    assert not off.quantization_on and not off.noise_on
    on = off.with_fidelity(True)
    assert on.quantization_on and on.noise_on
    assert on.plant_dt == off.plant_dt
