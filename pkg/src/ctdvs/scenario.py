"""Runnable DVS experiments: four schemes over one co-simulated system."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .energy import CmosParams, EnergyLedger, EnergyModel, energy_function
from .plantlab import PendulumParams, simulate_loop, synthesize_lqg
from .pmdesign import (
    GainScheduling,
    PiGains,
    PiRuntimeState,
    PolePair,
    full_speed_beta,
    pm_step,
    solve_pi_gains,
)
from .scheduler import (
    ScheduleTrace,
    UtilizationWindow,
    ConstantSpeed,
    busy_utilization,
    measured_utilization,
    run_schedule,
)
from .taskmodel import (
    DEFAULT_ALPHA_MIN,
    LambdaSchedule,
    TaskSet,
    TaskSpec,
    dvs1_speed,
    dvs2_speed,
    estimated_workload,
)

SCHEMES = ("dvs0", "dvs1", "dvs2", "ctdvs")
Sensor = Literal["execution", "busy"]


@dataclass(frozen=True)
class CtdvsConfig:
    setpoint: float = 0.95
    period: float = 0.1  # manager invocation interval T
    poles: tuple[float, float] = (0.3, 0.1)
    k_lambda: float | None = None  # None: max of the lambda schedule
    kp: float | None = None  # explicit gains override the pole design
    ki: float | None = None
    gain_scheduling: GainScheduling = "consistent"
    anti_windup: bool = True
    sensor: Sensor = "execution"
    printed_gains: bool = False  # force the rounded Kp = 0.6, Ki = 1.13

    def gains(self, schedule: LambdaSchedule) -> PiGains:
        k_lambda = self.k_lambda if self.k_lambda is not None else schedule.k_lambda
        if self.printed_gains:
            return PiGains(0.6, 1.13, k_lambda)
        if self.kp is not None and self.ki is not None:
            return PiGains(self.kp, self.ki, k_lambda)
        return solve_pi_gains(k_lambda, PolePair(*self.poles))


@dataclass(frozen=True)
class Scenario:
    tasks: TaskSet
    schedule: LambdaSchedule
    plant: PendulumParams = field(default_factory=PendulumParams)
    horizon: float = 12.0
    seed: int = 0
    micro_step: float = 1e-4
    alpha_min: float = DEFAULT_ALPHA_MIN
    energy_model: EnergyModel = "quadratic"
    cmos: CmosParams | None = None
    x0: tuple[float, float] | None = None
    ctdvs: CtdvsConfig = field(default_factory=CtdvsConfig)

    @property
    def window(self) -> float:
        return self.ctdvs.period

    def with_(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["tasks"] = [dataclasses.asdict(t) for t in self.tasks.tasks]
        d["schedule"] = [list(bp) for bp in self.schedule.breakpoints]
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def reference_tasks() -> TaskSet:
    return TaskSet(
        [TaskSpec(h, 0.004, 0.006, i + 1) for i, h in enumerate((0.020, 0.025, 0.030))]
    )


def reference_schedule() -> LambdaSchedule:
    return LambdaSchedule([(0.0, 0.8), (3.0, 1.0), (6.0, 0.5), (9.0, 1.5)])


def default_scenario(seed: int = 0) -> Scenario:
    return Scenario(reference_tasks(), reference_schedule(), seed=seed)


class PowerManager:
    """Feedback speed policy: PI on utilization with gain scheduling."""

    def __init__(self, ts: TaskSet, gains: PiGains, cfg: CtdvsConfig, alpha_min: float):
        self.ts = ts
        self.gains = gains
        self.cfg = cfg
        self.alpha_min = alpha_min
        self.omega_hat = estimated_workload(ts)
        self.state = PiRuntimeState(
            full_speed_beta(self.omega_hat, cfg.gain_scheduling), 0.0, cfg.setpoint
        )
        self._last_demand: dict[int, float] = {}
        self.feedback: list[float] = []

    def initial_speed(self) -> float:
        return 1.0

    def measure(self, window: UtilizationWindow) -> float:
        if self.cfg.sensor == "busy":
            return busy_utilization(window)
        return measured_utilization(window, self.ts, self._last_demand)

    def on_window(self, window: UtilizationWindow) -> float:
        u = self.measure(window)
        self.feedback.append(u)
        self.state, speed = pm_step(
            self.state,
            self.gains,
            u,
            self.omega_hat,
            self.alpha_min,
            convention=self.cfg.gain_scheduling,
            anti_windup=self.cfg.anti_windup,
        )
        return speed


def speed_policy(sc: Scenario, scheme: str):
    scheme = scheme.lower()
    if scheme == "dvs0":
        return ConstantSpeed(1.0)
    if scheme == "dvs1":
        return ConstantSpeed(dvs1_speed(sc.tasks, sc.alpha_min))
    if scheme == "dvs2":
        return ConstantSpeed(dvs2_speed(sc.tasks, sc.alpha_min))
    if scheme == "ctdvs":
        if sc.ctdvs.period < sc.tasks.max_period:
            warnings.warn(
                f"manager period {sc.ctdvs.period} shorter than the longest task period",
                RuntimeWarning,
                stacklevel=2,
            )
        return PowerManager(sc.tasks, sc.ctdvs.gains(sc.schedule), sc.ctdvs, sc.alpha_min)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


@dataclass
class SimTrace:
    """Per-window time series of one run (row i describes window i)."""

    scheme: str
    seed: int
    fingerprint: str
    loop_ids: tuple[int, ...]
    t: np.ndarray  # window end times
    alpha: np.ndarray
    requested_util: np.ndarray
    measured_util: np.ndarray
    busy_util: np.ndarray
    energy: np.ndarray
    avg_energy: np.ndarray
    cost: np.ndarray  # (rows, loops) accumulated J_i at t
    misses: np.ndarray
    diverged: np.ndarray  # (rows, loops) 0/1
    diverged_at: tuple[float | None, ...]
    schedule: ScheduleTrace | None = field(default=None, repr=False)
    final_states: tuple = field(default=(), repr=False)

    @property
    def cost_total(self) -> np.ndarray:
        return self.cost.sum(axis=1)

    @property
    def average_energy(self) -> float:
        return float(self.avg_energy[-1])

    def columns(self) -> list[tuple[str, str]]:
        cols = [
            ("t", "s"),
            ("alpha", "1"),
            ("requested_util", "1"),
            ("measured_util", "1"),
            ("busy_util", "1"),
            ("energy", "1"),
            ("avg_energy", "1"),
        ]
        cols += [(f"J_{i}", "cost") for i in self.loop_ids]
        cols += [("J_total", "cost"), ("misses", "count")]
        cols += [(f"diverged_{i}", "flag") for i in self.loop_ids]
        return cols

    def rows(self):
        for r in range(len(self.t)):
            yield (
                [self.t[r], self.alpha[r], self.requested_util[r], self.measured_util[r],
                 self.busy_util[r], self.energy[r], self.avg_energy[r]]
                + list(self.cost[r])
                + [self.cost[r].sum(), int(self.misses[r])]
                + [int(v) for v in self.diverged[r]]
            )


def _tick(t: float, dt: float) -> int:
    n = t / dt
    r = round(n)
    return int(r) if abs(n - r) < 1e-6 else math.ceil(n - 1e-9)


def run_scenario(sc: Scenario, scheme: str, seed: int | None = None) -> SimTrace:
    """Run one scheme; deterministic for a given scenario and seed."""
    seed = sc.seed if seed is None else seed
    if seed != sc.seed:
        sc = sc.with_(seed=seed)
    scheme = scheme.lower()
    policy = speed_policy(sc, scheme)
    st = run_schedule(sc.tasks, sc.schedule, policy, sc.horizon, sc.window)

    dt = sc.micro_step
    n_steps = _tick(sc.horizon, dt)
    win_ticks = [_tick(w.end, dt) for w in st.windows]
    loop_ids = tuple(t.loop_id for t in sc.tasks.tasks)
    costs, div_at, finals = [], [], []
    for task in sc.tasks.tasks:
        ctrl = synthesize_lqg(sc.plant, task.period)
        jobs = [
            (
                _tick(j.release_time, dt),
                None if j.completion_time is None else _tick(j.completion_time, dt),
            )
            for j in st.jobs_of(task.loop_id)
        ]
        res = simulate_loop(sc.plant, ctrl, jobs, n_steps, dt, seed, task.loop_id, sc.x0)
        costs.append(res.cost_cum[win_ticks])
        div_at.append(res.diverged_at)
        finals.append(res.final_x)

    efun = energy_function(sc.energy_model, sc.cmos)
    ledger = EnergyLedger(efun)
    t_end = np.array([w.end for w in st.windows])
    alpha = np.array([w.alpha for w in st.windows])
    energy = np.array([efun(a) for a in alpha])
    avg = np.empty(len(alpha))
    for i, w in enumerate(st.windows):
        ledger.add(w.length, w.alpha)
        avg[i] = ledger.average()
    omega_hat = estimated_workload(sc.tasks)
    req = np.array([w.lam * omega_hat / w.alpha for w in st.windows])
    memory: dict[int, float] = {}
    meas = np.array([measured_utilization(w, sc.tasks, memory) for w in st.windows])
    busy = np.array([busy_utilization(w) for w in st.windows])
    misses = np.array([st.misses_by(t) for t in t_end])
    diverged = np.array(
        [[1 if (d is not None and d <= t + 1e-12) else 0 for d in div_at] for t in t_end],
        dtype=int,
    ).reshape(len(t_end), len(loop_ids))
    cost = np.array(costs).T.reshape(len(t_end), len(loop_ids))
    return SimTrace(
        scheme, seed, sc.fingerprint(), loop_ids, t_end, alpha, req, meas, busy, energy, avg,
        cost, misses, diverged, tuple(div_at), st, tuple(finals),
    )


def _run_one(args):
    sc, scheme = args
    return run_scenario(sc, scheme)


def run_all(sc: Scenario, schemes=SCHEMES, parallel: bool = False) -> dict[str, SimTrace]:
    jobs = [(sc, s) for s in schemes]
    if parallel:
        with ProcessPoolExecutor(max_workers=len(jobs)) as ex:
            traces = list(ex.map(_run_one, jobs))
    else:
        traces = [_run_one(j) for j in jobs]
    return dict(zip(schemes, traces))


@dataclass
class SchemeSummary:
    scheme: str
    avg_energy: float
    energy_saving: float
    final_cost: float
    misses: int
    diverged: bool
    max_requested_util: float


@dataclass
class ComparisonReport:
    fingerprint: str
    seed: int
    rows: list[SchemeSummary]

    def by_scheme(self, scheme: str) -> SchemeSummary:
        for r in self.rows:
            if r.scheme == scheme:
                return r
        raise KeyError(scheme)

    def delta(self, a: str, b: str) -> dict[str, float]:
        ra, rb = self.by_scheme(a), self.by_scheme(b)
        return {
            "avg_energy": ra.avg_energy - rb.avg_energy,
            "final_cost": ra.final_cost - rb.final_cost,
            "misses": ra.misses - rb.misses,
        }


class ScenarioMismatch(ValueError):
    pass


def compare_schemes(traces) -> ComparisonReport:
    """Summarize runs that share scenario and seed."""
    traces = list(traces.values()) if isinstance(traces, dict) else list(traces)
    if not traces:
        raise ValueError("nothing to compare")
    fp = {(tr.fingerprint, tr.seed) for tr in traces}
    if len(fp) != 1:
        raise ScenarioMismatch(f"traces come from different scenarios: {sorted(fp)}")
    rows = [
        SchemeSummary(
            tr.scheme,
            tr.average_energy,
            1.0 - tr.average_energy,
            float(tr.cost_total[-1]),
            int(tr.misses[-1]),
            any(d is not None for d in tr.diverged_at),
            float(tr.requested_util.max()),
        )
        for tr in traces
    ]
    return ComparisonReport(traces[0].fingerprint, traces[0].seed, rows)
