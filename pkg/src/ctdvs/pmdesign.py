"""Pole-placement design and runtime of the PI power manager.

The DVS design model is ``U(z)/dbeta(z) = K_lambda/(z - 1)`` with
``beta = 1/alpha`` and the PI law ``dbeta(z)/e(z) = Kp + Ki*z/(z - 1)``.
The closed loop has characteristic polynomial

    z**2 + (K*Kp + K*Ki - 2)*z + (1 - K*Kp)

Pole pairs use the design parametrization ``z**2 + 2*a*z + (a**2 + b**2)``:
a :class:`PolePair` ``(a, b)`` fixes that polynomial, whose actual z-plane
roots are ``-a +/- b*i`` (see :meth:`PolePair.roots`).  Stability only
depends on ``a**2 + b**2`` and is unaffected by the sign convention.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Literal

import numpy as np

GainScheduling = Literal["consistent", "literal"]


@dataclass(frozen=True)
class PolePair:
    a: float
    b: float = 0.0

    @property
    def radius_sq(self) -> float:
        return self.a * self.a + self.b * self.b

    def roots(self) -> tuple[complex, complex]:
        """Actual roots of ``z**2 + 2*a*z + a**2 + b**2``."""
        return (complex(-self.a, self.b), complex(-self.a, -self.b))

    def __str__(self):
        return f"{self.a:g} +/- {self.b:g}i"


@dataclass(frozen=True)
class PiGains:
    kp: float
    ki: float
    k_lambda: float

    def __post_init__(self):
        if not self.k_lambda > 0:
            raise ValueError("k_lambda must be positive")

    def char_poly(self) -> tuple[float, float, float]:
        """Coefficients ``(1, c1, c0)`` of the closed-loop denominator."""
        k = self.k_lambda
        return (1.0, k * self.kp + k * self.ki - 2.0, 1.0 - k * self.kp)


@dataclass(frozen=True)
class PiRuntimeState:
    """Power-manager state between invocations.

    ``beta`` is the controller output in the design domain.  The physical
    ``1/alpha`` is ``beta/omega_hat`` under consistent gain scheduling and
    ``beta*omega_hat`` under the literal convention.
    """

    beta: float
    integrator: float
    setpoint: float

    def __post_init__(self):
        if not 0.0 < self.setpoint <= 1.0:
            raise ValueError(f"setpoint {self.setpoint} outside (0, 1]")


def solve_pi_gains(k_lambda: float, poles: PolePair) -> PiGains:
    if not k_lambda > 0:
        raise ValueError("k_lambda must be positive")
    a, b = poles.a, poles.b
    kp = (1.0 - a * a - b * b) / k_lambda
    ki = (2.0 + 2.0 * a) / k_lambda - kp
    if kp == 0.0:
        warnings.warn(
            "poles on the unit circle force Kp = 0 (pure integral control)",
            RuntimeWarning,
            stacklevel=2,
        )
    return PiGains(kp, ki, k_lambda)


def solve_pi_gains_from_roots(k_lambda: float, r1: complex, r2: complex) -> PiGains:
    """Place the actual closed-loop roots at ``r1`` and ``r2``.

    The roots must be real or a conjugate pair.
    """
    s, p = r1 + r2, r1 * r2
    if abs(complex(s).imag) > 1e-12 or abs(complex(p).imag) > 1e-12:
        raise ValueError("roots must be real or complex conjugates")
    s, p = complex(s).real, complex(p).real
    # z^2 - s z + p  <=>  2a = -s, a^2 + b^2 = p
    return solve_pi_gains_coeffs(k_lambda, -s, p)


def solve_pi_gains_coeffs(k_lambda: float, c1: float, c0: float) -> PiGains:
    """Gains giving the characteristic polynomial ``z**2 + c1*z + c0``."""
    if not k_lambda > 0:
        raise ValueError("k_lambda must be positive")
    kp = (1.0 - c0) / k_lambda
    ki = (2.0 + c1) / k_lambda - kp
    return PiGains(kp, ki, k_lambda)


def closed_loop_poles(g: PiGains) -> PolePair | tuple[float, float]:
    """Closed-loop poles of the DVS loop with gains ``g``.

    Complex (or double) roots come back as a :class:`PolePair` in the design
    parametrization; two distinct real roots come back as a float tuple of
    the actual roots.
    """
    _, c1, c0 = g.char_poly()
    a = c1 / 2.0
    disc = c0 - a * a
    if disc >= 0:
        return PolePair(a, math.sqrt(disc))
    r1, r2 = closed_loop_roots(g)
    return (r1.real, r2.real)


def closed_loop_roots(g: PiGains) -> tuple[complex, complex]:
    _, c1, c0 = g.char_poly()
    sq = cmath.sqrt(c1 * c1 / 4.0 - c0)
    return (-c1 / 2.0 + sq, -c1 / 2.0 - sq)


def is_stable(poles: PolePair | PiGains | Iterable[complex]) -> bool:
    """Strictly inside the unit circle."""
    if isinstance(poles, PolePair):
        return poles.radius_sq < 1.0
    if isinstance(poles, PiGains):
        poles = closed_loop_roots(poles)
    return all(abs(p) < 1.0 for p in poles)


def _beta_bounds(omega_hat, alpha_min, convention):
    if convention == "consistent":
        return omega_hat, omega_hat / alpha_min
    return 1.0, 1.0 / alpha_min


def _speed_raw(beta, omega_hat, convention):
    if convention == "consistent":
        return omega_hat / beta if beta != 0 else math.inf
    return 1.0 / (beta * omega_hat) if beta != 0 else math.inf


def full_speed_beta(omega_hat: float, convention: GainScheduling = "consistent"):
    """Design-domain ``beta`` at which the commanded speed is 1."""
    return omega_hat if convention == "consistent" else 1.0


def pm_step(
    st: PiRuntimeState,
    g: PiGains,
    measured_u: float,
    omega_hat: float,
    alpha_min: float = 0.1,
    *,
    convention: GainScheduling = "consistent",
    anti_windup: bool = True,
    saturate: bool = True,
) -> tuple[PiRuntimeState, float]:
    """One power-manager invocation; returns the new state and speed.

    Incremental PI: ``S += e; beta += Kp*e + Ki*S``, so that
    ``dbeta/e = Kp + Ki*z/(z - 1)``.  With ``saturate`` the speed and
    ``beta`` are clamped; anti-windup skips the integrator update when the
    error would push a saturated output further out.
    """
    if measured_u < 0:
        raise ValueError("measured utilization must be non-negative")
    if not omega_hat > 0:
        raise ValueError("omega_hat must be positive")
    e = st.setpoint - measured_u
    s_new = st.integrator + e
    beta = st.beta + g.kp * e + g.ki * s_new
    if not saturate:
        return replace(st, beta=beta, integrator=s_new), _speed_raw(
            beta, omega_hat, convention
        )

    lo, hi = _beta_bounds(omega_hat, alpha_min, convention)
    raw = _speed_raw(beta, omega_hat, convention) if beta > 0 else math.inf
    if anti_windup and (
        (e > 0 and (beta > hi or raw < alpha_min))
        or (e < 0 and (beta < lo or raw > 1.0))
    ):
        s_new = st.integrator
        beta = st.beta + g.kp * e + g.ki * s_new
    beta = min(hi, max(lo, beta))
    speed = min(1.0, max(alpha_min, _speed_raw(beta, omega_hat, convention)))
    return replace(st, beta=beta, integrator=s_new), speed


def simulate_design_model(
    g: PiGains,
    u_r: float,
    lambda_const: float,
    omega_hat_const: float,
    steps: int,
    *,
    u0: float | None = None,
    beta0: float | None = None,
    saturate: bool = False,
    alpha_min: float = 0.1,
    convention: GainScheduling = "consistent",
) -> np.ndarray:
    """Utilization trajectory ``U(1..steps)`` of the ideal sampled loop.

    ``U(j+1) = lambda * omega_hat / alpha(j)``; without saturation this is
    ``lambda * beta(j)`` (consistent) or ``lambda * omega_hat**2 * beta(j)``
    (literal).  ``u0`` is the first measurement, ``beta0`` the controller
    output before it; both default to the equilibrium ``U = u_r``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    gain = lambda_const
    if convention == "literal":
        gain *= omega_hat_const**2
    if beta0 is None:
        beta0 = u_r / gain
    u = u_r if u0 is None else u0
    st = PiRuntimeState(beta0, 0.0, u_r)
    out = np.empty(steps)
    for j in range(steps):
        if saturate:
            st, speed = pm_step(
                st, g, min(1.0, max(u, 0.0)), omega_hat_const, alpha_min,
                convention=convention,
            )
            u = min(1.0, lambda_const * omega_hat_const / speed)
        else:
            e = u_r - u
            s_new = st.integrator + e
            st = replace(st, beta=st.beta + g.kp * e + g.ki * s_new, integrator=s_new)
            u = gain * st.beta
        out[j] = u
    return out
