"""Inverted-pendulum plants, LQG control jobs and accumulated control cost.

Each control job samples its plant at release and actuates at completion,
latched to the next point of a fixed micro-grid.  Because job timing does
not depend on plant values, a loop can be simulated after the schedule is
known; :func:`simulate_loop` does that on the micro-grid.

Random draws per loop and seed:
  * process noise: one standard-normal pair per micro-step, drawn up front
    from ``SeedSequence([seed, loop_id, 0])``;
  * measurement noise: one draw per job, from ``SeedSequence([seed, loop_id, 1])``.
Every scheme therefore sees the same noise realizations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .controlmath import (
    SynthesisError,
    discretize_noise,
    kalman_gain,
    lqr_gain,
    spectral_radius,
    zoh_discretize,
)

DIVERGENCE_LIMIT = 1e6
U_WEIGHT = 0.01


@dataclass(frozen=True)
class PendulumParams:
    a: tuple = ((0.0, 1.0), (100.0, 0.0))
    b: tuple = (0.0, 100.0)
    c_out: tuple = (1.0, 0.0)
    noise_in: tuple = (0.0, 1.0)
    v_intensity: float = 0.1
    e_variance: float = 1e-4

    @property
    def A(self):
        return np.array(self.a, dtype=float)

    @property
    def B(self):
        return np.array(self.b, dtype=float).reshape(-1, 1)

    @property
    def C(self):
        return np.array(self.c_out, dtype=float).reshape(1, -1)

    @property
    def G(self):
        return np.array(self.noise_in, dtype=float).reshape(-1, 1)

    def without_noise(self) -> "PendulumParams":
        return PendulumParams(self.a, self.b, self.c_out, self.noise_in, 0.0, 0.0)


def _psd_sqrt(q):
    w, v = np.linalg.eigh((q + q.T) / 2)
    return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass
class PendulumPlant:
    params: PendulumParams = field(default_factory=PendulumParams)
    x: np.ndarray = field(default_factory=lambda: np.zeros(2))
    u: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    def step_matrices(self, dt: float):
        key = round(dt, 15)
        if key not in self._cache:
            p = self.params
            phi, gamma = zoh_discretize(p.A, p.B, dt)
            qd = discretize_noise(p.A, p.G, p.v_intensity, dt)
            self._cache[key] = (phi, gamma[:, 0], _psd_sqrt(qd))
        return self._cache[key]


def plant_advance(p: PendulumPlant, dt: float, rng: np.random.Generator) -> PendulumPlant:
    """Advance the plant by ``dt`` with the held input ``p.u``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    phi, gamma, sq = p.step_matrices(dt)
    w = sq @ rng.standard_normal(sq.shape[1])
    p.x = phi @ p.x + gamma * p.u + w
    return p


def sample_output(p: PendulumPlant, rng: np.random.Generator) -> float:
    e = math.sqrt(p.params.e_variance) * rng.standard_normal() if p.params.e_variance else 0.0
    return float(p.params.C[0] @ p.x + e)


@dataclass
class LqgController:
    k: np.ndarray  # regulator gain, u = -k @ xhat
    m: np.ndarray  # filter gain
    phi: np.ndarray
    gamma: np.ndarray
    c_out: np.ndarray
    h: float
    xhat: np.ndarray = field(default_factory=lambda: np.zeros(2))  # prior estimate

    def reset(self):
        self.xhat = np.zeros_like(self.xhat)

    def loop_spectral_radius(self) -> float:
        """Largest |eigenvalue| of the separated regulator/estimator loop."""
        g = self.gamma.reshape(-1, 1)
        reg = self.phi - g @ self.k.reshape(1, -1)
        est = self.phi - self.phi @ self.m.reshape(-1, 1) @ self.c_out.reshape(1, -1)
        return max(spectral_radius(reg), spectral_radius(est))


def synthesize_lqg(params: PendulumParams, h: float) -> LqgController:
    """LQG for ``J = int y^2 + 0.01 u^2 dt`` sampled with period ``h``.

    Stage cost ``x'(C'C h)x + u'(0.01 h)u``; process noise enters along
    ``params.noise_in`` with spectral density ``v_intensity``.
    """
    A, B, C = params.A, params.B, params.C
    phi, gamma = zoh_discretize(A, B, h)
    k = lqr_gain(phi, gamma, C.T @ C * h, np.array([[U_WEIGHT * h]]))
    v = params.v_intensity if params.v_intensity > 0 else 0.1
    qd = discretize_noise(A, params.G, v, h)
    r = params.e_variance if params.e_variance > 0 else 1e-4
    m = kalman_gain(phi, C, qd, r)
    ctrl = LqgController(k[0], m[:, 0], phi, gamma[:, 0], C[0], h)
    rho = ctrl.loop_spectral_radius()
    if not rho < 1.0:
        raise SynthesisError(f"LQG loop at h={h} not stable (rho={rho:.4f})")
    return ctrl


def control_job_compute(ctrl: LqgController, y: float) -> float:
    """Measurement update with ``y``, control law, then time update."""
    xc = ctrl.xhat + ctrl.m * (y - ctrl.c_out @ ctrl.xhat)
    u = float(-ctrl.k @ xc)
    ctrl.xhat = ctrl.phi @ xc + ctrl.gamma * u
    return u


@dataclass
class CostAccumulator:
    loop_id: int
    j_value: float = 0.0
    last_time: float = 0.0


def accumulate_cost(acc: CostAccumulator, y: float, u: float, dt: float) -> CostAccumulator:
    if dt <= 0:
        raise ValueError("dt must be positive")
    acc.j_value += (y * y + U_WEIGHT * u * u) * dt
    acc.last_time += dt
    return acc


@dataclass
class LoopResult:
    loop_id: int
    cost_cum: np.ndarray  # J after each micro-step, length n_steps + 1
    x1: np.ndarray  # angle at each micro-grid point, length n_steps + 1
    final_x: np.ndarray
    diverged_at: float | None
    actuations: int


class _ModalStepper:
    """Runs ``x+ = phi x + d_k`` over many steps through decoupled modes."""

    def __init__(self, phi):
        lam, v = np.linalg.eig(phi)
        self.ok = np.linalg.cond(v) < 1e8
        self.lam, self.v, self.vinv = lam, v, np.linalg.inv(v) if self.ok else None
        self.phi = phi

    def run(self, x0, drive):
        """States after each of ``len(drive)`` steps (rows)."""
        if not self.ok:
            out = np.empty_like(drive)
            x = x0
            for i, d in enumerate(drive):
                x = self.phi @ x + d
                out[i] = x
            return out
        z0 = self.vinv @ x0
        dz = drive @ self.vinv.T
        z = np.empty(dz.shape, dtype=complex)
        for i, l in enumerate(self.lam):
            z[:, i] = lfilter([1.0], [1.0, -l], dz[:, i], zi=[l * z0[i]])[0]
        return (z @ self.v.T).real


def simulate_loop(
    params: PendulumParams,
    ctrl: LqgController,
    jobs: list[tuple[int, int | None]],
    n_steps: int,
    dt: float,
    seed: int,
    loop_id: int,
    x0=None,
) -> LoopResult:
    """Co-simulate one plant with its control jobs on the micro-grid.

    ``jobs`` lists ``(release_tick, actuation_tick)`` per job in release
    order; ``actuation_tick`` is ``None`` for jobs unfinished at the horizon.
    """
    plant = PendulumPlant(params)
    phi, gamma, sq = plant.step_matrices(dt)
    stepper = _ModalStepper(phi)
    proc = np.random.default_rng(np.random.SeedSequence([seed, loop_id, 0]))
    meas = np.random.default_rng(np.random.SeedSequence([seed, loop_id, 1]))
    w = proc.standard_normal((n_steps, sq.shape[1])) @ sq.T
    e = meas.standard_normal(len(jobs)) * math.sqrt(params.e_variance)
    ctrl.reset()

    events = []  # (tick, order, job index); actuation before sensing
    for k, (r, a) in enumerate(jobs):
        if r < n_steps:
            events.append((r, 1, k))
        if a is not None and a < n_steps:
            events.append((max(a, r + 1), 0, k))
    events.sort()

    x = np.zeros(2) if x0 is None else np.asarray(x0, dtype=float).copy()
    x1 = np.empty(n_steps + 1)
    u_seq = np.zeros(n_steps)
    x1[0] = x[0]
    pending: dict[int, float] = {}
    u = 0.0
    cur = 0
    diverged_at = None
    actuations = 0

    def advance(to):
        nonlocal x, cur, diverged_at
        if to <= cur:
            return
        u_seq[cur:to] = u
        if diverged_at is not None:
            x1[cur + 1 : to + 1] = x[0]
            cur = to
            return
        states = stepper.run(x, gamma * u + w[cur:to])
        big = np.flatnonzero(~(np.abs(states[:, 0]) <= DIVERGENCE_LIMIT))
        if big.size:
            i = big[0]
            diverged_at = (cur + i + 1) * dt
            x = np.array([math.copysign(DIVERGENCE_LIMIT, states[i, 0]) if np.isfinite(states[i, 0]) else DIVERGENCE_LIMIT, 0.0])
            states[i:, 0] = x[0]
        else:
            x = states[-1]
        x1[cur + 1 : to + 1] = states[:, 0]
        cur = to

    for tick, kind, k in events:
        advance(tick)
        if kind == 0:
            u = pending.pop(k)
            actuations += 1
        else:
            y = float(x[0] + e[k])
            pending[k] = control_job_compute(ctrl, y)
    advance(n_steps)

    step_cost = (np.minimum(x1[:-1] ** 2, DIVERGENCE_LIMIT**2) + U_WEIGHT * u_seq**2) * dt
    cost_cum = np.concatenate(([0.0], np.cumsum(step_cost)))
    return LoopResult(loop_id, cost_cum, x1, x.copy(), diverged_at, actuations)
