"""Elastic interface model: activation, force values, determinant identity."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flexarm.contact import (ContactParams, contact_force, force_rate,
                             penetration, projectors, stiffness_determinant,
                             stiffness_matrix)


def test_force_frozen_values(bench_contact):
    # hand algebra: Ke = diag(50, 100) for n = (0, -1); p 3 mm across,
    # 4.7 mm into the interface
    p = np.array([0.153, 0.2647])
    assert penetration(p, bench_contact) == pytest.approx(-0.0047, abs=1e-15)
    f = contact_force(p, bench_contact)
    np.testing.assert_allclose(
        f, [0.15000000000000013, 0.4699999999999982], rtol=1e-13)


def test_force_zero_outside(bench_contact):
    p = np.array([0.153, 0.2513])
    assert penetration(p, bench_contact) == pytest.approx(0.0087, abs=1e-15)
    np.testing.assert_array_equal(contact_force(p, bench_contact), np.zeros(2))


def test_boundary_counts_as_touching(bench_contact):
    # penetration of exactly zero engages the elastic force (<= test), and
    # the force there is numerically zero anyway
    p = np.array([0.20, 0.26])
    assert penetration(p, bench_contact) == 0.0
    f = contact_force(p, bench_contact)
    np.testing.assert_allclose(f, [50.0 * 0.05, 0.0], rtol=1e-13)


def test_active_override(bench_contact):
    p = np.array([0.153, 0.2647])
    np.testing.assert_array_equal(
        contact_force(p, bench_contact, active=False), np.zeros(2))
    p_out = np.array([0.153, 0.2513])
    f = contact_force(p_out, bench_contact, active=True)
    assert f[1] < 0.0  # pulled force on the released side


def test_compression_sign(bench_contact):
    # under compression the normal force component opposes the normal
    p = np.array([0.151, 0.263])
    f = contact_force(p, bench_contact)
    assert bench_contact.n @ f <= 0.0


unit_angle = st.floats(0.0, 2.0 * math.pi, allow_nan=False)
modulus = st.floats(0.1, 500.0, allow_nan=False)


@given(phi=unit_angle)
def test_projectors_partition_identity(phi):
    n = np.array([math.cos(phi), math.sin(phi)])
    Nn, Nt = projectors(n)
    np.testing.assert_allclose(Nn + Nt, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(Nn @ Nn, Nn, atol=1e-15)
    np.testing.assert_allclose(Nt @ Nt, Nt, atol=1e-15)
    np.testing.assert_allclose(Nn @ Nt, np.zeros((2, 2)), atol=1e-15)


@given(phi=unit_angle, kn=modulus, kt=modulus)
def test_stiffness_eigenstructure(phi, kn, kt):
    n = np.array([math.cos(phi), math.sin(phi)])
    t = np.array([-n[1], n[0]])
    Ke = stiffness_matrix(kn, kt, n)
    np.testing.assert_allclose(Ke @ n, kn * n, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(Ke @ t, kt * t, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(Ke, Ke.T, atol=0)


@given(phi=unit_angle, kn=modulus, kt=modulus)
def test_determinant_identity(phi, kn, kt):
    # matrix-determinant lemma collapses det Ke to the product of the moduli;
    # the explicit cofactor expansion cancels at the |Ke|^2 scale
    n = np.array([math.cos(phi), math.sin(phi)])
    Ke = stiffness_matrix(kn, kt, n)
    closed = stiffness_determinant(kn, kt)
    assert closed == kt * kn
    det = Ke[0, 0] * Ke[1, 1] - Ke[0, 1] * Ke[1, 0]
    assert abs(det - closed) <= 1e-14 * (kn * kn + kt * kt)


@given(phi=unit_angle,
       kn=st.floats(0.0040, 0.0120), kt=st.floats(0.0040, 0.0120))
def test_determinant_identity_estimate_range(phi, kn, kt):
    # over the projection bounds the moduli stay within a factor three of
    # each other, so the identity holds to 1e-14 relative
    n = np.array([math.cos(phi), math.sin(phi)])
    Ke = stiffness_matrix(kn, kt, n)
    closed = stiffness_determinant(kn, kt)
    det = Ke[0, 0] * Ke[1, 1] - Ke[0, 1] * Ke[1, 0]
    assert abs(det - closed) <= 1e-14 * abs(closed)


def test_force_rate_is_frozen_deflection_chain_rule():
    Ke = np.diag([50.0, 100.0])
    Jp = np.array([[0.1, -0.2, 0.05, 0.0], [0.3, 0.1, -0.1, 0.2]])
    gd = np.array([1.0, -0.5, 0.25, 2.0])
    np.testing.assert_allclose(force_rate(Ke, Jp, gd), Ke @ (Jp @ gd),
                               atol=0)


def test_params_validation():
    with pytest.raises(ValueError):
        ContactParams(100.0, 50.0, n=np.array([0.0, -2.0]))
    with pytest.raises(ValueError):
        ContactParams(-1.0, 50.0)
    ct = ContactParams(100.0, 50.0)
    np.testing.assert_array_equal(ct.ke_pair, [100.0, 50.0])
