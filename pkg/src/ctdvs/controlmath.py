"""Dense linear-algebra helpers for sampled-data LQG synthesis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm


class SynthesisError(RuntimeError):
    """Riccati iteration failed or produced an unverified solution."""


@dataclass(frozen=True)
class DiscretePlant:
    phi: np.ndarray
    gamma: np.ndarray
    c_out: np.ndarray
    q_d: np.ndarray
    r_meas: float
    step_h: float


def _square(a, name="A"):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def matrix_exponential(a, t: float = 1.0) -> np.ndarray:
    """``exp(A t)`` (scaling and squaring with a Pade core)."""
    a = _square(a)
    if t < 0:
        raise ValueError("t must be non-negative")
    return expm(a * t)


def zoh_discretize(a, b, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization via the augmented exponential."""
    a = _square(a)
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    if h <= 0:
        raise ValueError("h must be positive")
    n, m = b.shape
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = a
    aug[:n, n:] = b
    e = matrix_exponential(aug, h)
    return e[:n, :n], e[:n, n:]


def discretize_noise(a, noise_in, v_intensity, h: float) -> np.ndarray:
    """Discrete covariance of white noise ``G v`` over one step (Van Loan).

    ``noise_in`` is ``G`` (n x p) and ``v_intensity`` the p x p (or scalar)
    spectral density of ``v``.
    """
    a = _square(a)
    n = a.shape[0]
    g = np.asarray(noise_in, dtype=float).reshape(n, -1)
    v = np.atleast_2d(np.asarray(v_intensity, dtype=float))
    if h <= 0:
        raise ValueError("h must be positive")
    if np.any(np.linalg.eigvalsh((v + v.T) / 2) < -1e-15):
        raise ValueError("noise intensity must be positive semidefinite")
    w = g @ v @ g.T
    m = np.zeros((2 * n, 2 * n))
    m[:n, :n] = -a
    m[:n, n:] = w
    m[n:, n:] = a.T
    f = matrix_exponential(m, h)
    phi_t = f[n:, n:]
    q = phi_t.T @ f[:n, n:]
    return (q + q.T) / 2.0


def spectral_radius(m) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.atleast_2d(m)))))


def dare_residual(phi, gamma, q, r, p) -> float:
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    gamma = np.asarray(gamma, dtype=float).reshape(phi.shape[0], -1)
    r = np.atleast_2d(np.asarray(r, dtype=float))
    s = r + gamma.T @ p @ gamma
    rhs = phi.T @ p @ phi - phi.T @ p @ gamma @ np.linalg.solve(s, gamma.T @ p @ phi) + q
    return float(np.max(np.abs(rhs - p)))


def solve_dare(phi, gamma, q, r, *, tol: float = 1e-8, max_iter: int = 100) -> np.ndarray:
    """Stabilizing solution of the discrete algebraic Riccati equation.

    Structure-preserving doubling; the result is accepted only if its
    residual is below ``tol`` relative to ``max(1, |P|)``.
    """
    phi = _square(phi, "phi")
    n = phi.shape[0]
    gamma = np.asarray(gamma, dtype=float).reshape(n, -1)
    q = np.atleast_2d(np.asarray(q, dtype=float))
    r = np.atleast_2d(np.asarray(r, dtype=float))
    if np.any(np.linalg.eigvalsh((r + r.T) / 2) <= 0):
        raise SynthesisError("R must be positive definite")
    eye = np.eye(n)
    a_k = phi.copy()
    g_k = gamma @ np.linalg.solve(r, gamma.T)
    h_k = q.copy()
    for _ in range(max_iter):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                a_k, g_k, h_next = _sda_step(a_k, g_k, h_k, eye)
        except np.linalg.LinAlgError as exc:
            raise SynthesisError(f"Riccati doubling broke down: {exc}") from None
        done = np.max(np.abs(h_next - h_k)) <= 1e-14 * max(1.0, np.max(np.abs(h_next)))
        h_k = h_next
        if not np.all(np.isfinite(h_k)) or done:
            break
    p = (h_k + h_k.T) / 2.0
    if not np.all(np.isfinite(p)):
        raise SynthesisError("Riccati doubling diverged")
    res = dare_residual(phi, gamma, q, r, p)
    if res > tol * max(1.0, float(np.max(np.abs(p)))):
        raise SynthesisError(f"DARE residual {res:.3g} above tolerance")
    k = np.linalg.solve(r + gamma.T @ p @ gamma, gamma.T @ p @ phi)
    if not spectral_radius(phi - gamma @ k) < 1.0:
        raise SynthesisError("Riccati solution is not stabilizing")
    return p


def _sda_step(a_k, g_k, h_k, eye):
    w = eye + g_k @ h_k
    w_a = np.linalg.solve(w, a_k)
    w_g = np.linalg.solve(w, g_k)
    h_next = h_k + a_k.T @ h_k @ w_a
    g_next = g_k + a_k @ w_g @ a_k.T
    return a_k @ w_a, g_next, h_next


def lqr_gain(phi, gamma, q, r) -> np.ndarray:
    """State feedback ``u = -K x`` minimizing ``sum x'Qx + u'Ru``."""
    phi = _square(phi, "phi")
    gamma = np.asarray(gamma, dtype=float).reshape(phi.shape[0], -1)
    r = np.atleast_2d(np.asarray(r, dtype=float))
    p = solve_dare(phi, gamma, q, r)
    return np.linalg.solve(r + gamma.T @ p @ gamma, gamma.T @ p @ phi)


def kalman_gain(phi, c_out, q_d, r_meas) -> np.ndarray:
    """Filter (measurement-update) gain ``M`` of the stationary Kalman filter.

    The corrected estimate is ``xhat + M (y - C xhat)``; the one-step
    predictor gain is ``phi @ M``.
    """
    phi = _square(phi, "phi")
    c = np.atleast_2d(np.asarray(c_out, dtype=float))
    r = np.atleast_2d(np.asarray(r_meas, dtype=float))
    p = solve_dare(phi.T, c.T, q_d, r)
    return p @ c.T @ np.linalg.inv(c @ p @ c.T + r)
