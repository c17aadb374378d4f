import math

import numpy as np
import pytest
import scipy.linalg as sla
from scipy.integrate import trapezoid
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ctdvs.controlmath import (
    SynthesisError,
    dare_residual,
    discretize_noise,
    kalman_gain,
    lqr_gain,
    matrix_exponential,
    solve_dare,
    spectral_radius,
    zoh_discretize,
)

A_PEND = np.array([[0.0, 1.0], [100.0, 0.0]])
B_PEND = np.array([[0.0], [100.0]])
mats = arrays(np.float64, (2, 2), elements=st.floats(-3, 3))


def test_expm_zero_and_closed_form():
    assert np.array_equal(matrix_exponential(np.zeros((2, 2))), np.eye(2))
    c, s = math.cosh(0.2), math.sinh(0.2)
    expected = np.array([[c, s / 10], [10 * s, c]])
    assert np.allclose(matrix_exponential(A_PEND, 0.02), expected, rtol=1e-13, atol=0)


@given(a=mats, t1=st.floats(0.0, 1.0), t2=st.floats(0.0, 1.0))
def test_expm_semigroup(a, t1, t2):
    lhs = matrix_exponential(a, t1 + t2)
    rhs = matrix_exponential(a, t1) @ matrix_exponential(a, t2)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_zoh_limits_and_closed_form():
    phi, gamma = zoh_discretize(A_PEND, B_PEND, 1e-9)
    assert np.allclose(phi, np.eye(2), atol=1e-7) and np.allclose(gamma, 0, atol=1e-6)
    phi, gamma = zoh_discretize(A_PEND, B_PEND, 0.02)
    # int_0^h expm(A s) B ds = [cosh(10h) - 1, 10 sinh(10h)]
    assert gamma[:, 0] == pytest.approx([math.cosh(0.2) - 1, 10 * math.sinh(0.2)], rel=1e-13)


@given(a=mats, h=st.floats(0.01, 0.5))
def test_zoh_identity_invertible(a, h):
    a = a - 4 * np.eye(2)  # keep well away from singular
    if abs(np.linalg.det(a)) < 1e-2:
        return
    b = np.array([[1.0], [0.5]])
    phi, gamma = zoh_discretize(a, b, h)
    assert np.allclose(gamma, np.linalg.solve(a, (phi - np.eye(2)) @ b), atol=1e-9)


@given(a=mats, h1=st.floats(0.001, 0.2), h2=st.floats(0.001, 0.2))
def test_zoh_composition(a, h1, h2):
    b = np.array([[0.3], [1.0]])
    p1, g1 = zoh_discretize(a, b, h1)
    p2, g2 = zoh_discretize(a, b, h2)
    p, g = zoh_discretize(a, b, h1 + h2)
    assert np.allclose(p, p2 @ p1, atol=1e-9)
    assert np.allclose(g, p2 @ g1 + g2, atol=1e-9)


def test_noise_discretization():
    g = np.array([0.0, 1.0])
    assert np.array_equal(discretize_noise(A_PEND, g, 0.0, 0.02), np.zeros((2, 2)))
    h = 1e-6
    q = discretize_noise(A_PEND, g, 0.1, h)
    assert np.allclose(q, 0.1 * np.outer(g, g) * h, rtol=1e-4, atol=h * h)
    # against a fine quadrature of int expm(A s) G V G' expm(A s)' ds
    ss = np.linspace(0, 0.02, 4001)
    vals = np.array([sla.expm(A_PEND * s) @ np.outer(g, g) @ sla.expm(A_PEND * s).T for s in ss])
    ref = 0.1 * trapezoid(vals, ss, axis=0)
    assert np.allclose(discretize_noise(A_PEND, g, 0.1, 0.02), ref, rtol=1e-6)


@given(a=mats, v=st.floats(0.0, 2.0), h=st.floats(0.001, 0.3))
def test_noise_symmetric_psd(a, v, h):
    q = discretize_noise(a, np.array([[1.0], [0.3]]), v, h)
    assert np.array_equal(q, q.T)
    assert np.linalg.eigvalsh(q).min() >= -1e-12 * max(1.0, np.abs(q).max())


def test_dare_trivial_and_scalar():
    p = solve_dare(np.array([[0.5]]), np.array([[1.0]]), np.zeros((1, 1)), np.array([[1.0]]))
    assert p == pytest.approx(0.0)
    # scalar: p = a^2 p - a^2 p^2/(r + p) + q with a=0.5, q=r=1
    # -> p^2 - (a^2 + q - 1) p - q = 0 after clearing (r + p)
    a, q = 0.5, 1.0
    b = -(a * a + q - 1.0)
    p_ref = (-b + math.sqrt(b * b + 4 * q)) / 2
    p = solve_dare(np.array([[a]]), np.array([[1.0]]), np.array([[q]]), np.array([[1.0]]))
    assert p[0, 0] == pytest.approx(p_ref, rel=1e-12)
    k = lqr_gain(np.array([[a]]), np.array([[1.0]]), np.array([[q]]), np.array([[1.0]]))
    assert k[0, 0] == pytest.approx(a * p_ref / (1 + p_ref), rel=1e-12)


def test_lqr_zero_weight_stable_plant():
    k = lqr_gain(np.array([[0.5, 0.1], [0.0, 0.3]]), np.eye(2)[:, :1], np.zeros((2, 2)),
                 np.eye(1))
    assert np.allclose(k, 0.0)


def test_dare_random_stabilizable():
    rng = np.random.default_rng(7)
    for _ in range(50):
        phi = rng.normal(size=(3, 3))
        gamma = rng.normal(size=(3, 1))
        q = np.eye(3)
        r = np.array([[rng.uniform(0.01, 2.0)]])
        p = solve_dare(phi, gamma, q, r)
        assert dare_residual(phi, gamma, q, r, p) < 1e-8 * max(1.0, np.abs(p).max())
        assert np.allclose(p, sla.solve_discrete_are(phi, gamma, q, r), rtol=1e-7)
        k = lqr_gain(phi, gamma, q, r)
        assert spectral_radius(phi - gamma @ k) < 1


def test_dare_uncontrollable_unstable_fails():
    phi = np.diag([2.0, 0.5])
    gamma = np.array([[0.0], [1.0]])
    with pytest.raises(SynthesisError):
        solve_dare(phi, gamma, np.eye(2), np.eye(1))


def test_dare_rejects_indefinite_r():
    with pytest.raises(SynthesisError):
        solve_dare(np.eye(1), np.eye(1), np.eye(1), np.array([[0.0]]))


@pytest.mark.parametrize("h", [0.020, 0.025, 0.030])
def test_pendulum_kalman_stable(h):
    phi, _ = zoh_discretize(A_PEND, B_PEND, h)
    c = np.array([[1.0, 0.0]])
    qd = discretize_noise(A_PEND, np.array([0.0, 1.0]), 0.1, h)
    m = kalman_gain(phi, c, qd, 1e-4)
    assert spectral_radius(phi - phi @ m @ c) < 1
    p = solve_dare(phi.T, c.T, qd, np.array([[1e-4]]))
    assert dare_residual(phi.T, c.T, qd, np.array([[1e-4]]), p) < 1e-8 * max(1, np.abs(p).max())


def test_nonsquare_rejected():
    with pytest.raises(ValueError):
        matrix_exponential(np.ones((2, 3)))
    with pytest.raises(ValueError):
        zoh_discretize(A_PEND, B_PEND, 0.0)
