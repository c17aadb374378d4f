"""Event-driven preemptive EDF at variable CPU speed.

Job demand is kept in nominal (full-speed) seconds and drains at rate
``alpha`` per wall-clock second.  The speed only changes at manager
invocations, which happen at every multiple of the window length ``T``;
windows therefore never straddle a speed change.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Protocol

from .taskmodel import LambdaSchedule, TaskSet, estimated_workload

_EPS = 1e-12
MISS_TOL = 1e-9


@dataclass
class Job:
    loop_id: int
    index: int  # k-th job of its task
    release_time: float
    absolute_deadline: float
    nominal_demand: float
    remaining: float
    completion_time: float | None = None
    exec_intervals: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def missed(self) -> bool:
        return (
            self.completion_time is None
            or self.completion_time > self.absolute_deadline + MISS_TOL
        )

    @property
    def response_time(self) -> float | None:
        if self.completion_time is None:
            return None
        return self.completion_time - self.release_time


@dataclass
class UtilizationWindow:
    start: float
    length: float
    alpha: float
    lam: float  # time-weighted execution time factor over the window
    busy_time: float = 0.0
    # (loop_id, nominal demand, wall execution time) of jobs completed here
    completed: list[tuple[int, float, float]] = field(default_factory=list)
    backlog: float = 0.0  # pending nominal demand at window end
    overdue: float = 0.0  # part of ``backlog`` whose deadline has passed

    @property
    def end(self) -> float:
        return self.start + self.length


def busy_utilization(window: UtilizationWindow) -> float:
    """Busy fraction of a finished window, in ``[0, 1]``."""
    return min(1.0, max(0.0, window.busy_time / window.length))


def measured_utilization(
    window: UtilizationWindow, ts: TaskSet, memory: dict[int, float] | None = None
) -> float:
    """CPU utilization ``sum(c_i / h_i)`` observed over a finished window.

    ``c_i`` is the execution time at the window's speed of task i's jobs,
    taken from the cycles (nominal demand) of the jobs that completed in
    the window and averaged per task.  A task with no completion falls back
    to ``memory`` (its last observed mean), then to its estimate.  Not
    capped at 1: under overload this reports the demand the CPU could not
    serve, which the busy fraction cannot show.
    """
    memory = {} if memory is None else memory
    per_task: dict[int, list[float]] = {}
    for loop_id, nominal, _ in window.completed:
        per_task.setdefault(loop_id, []).append(nominal)
    for loop_id, vals in per_task.items():
        memory[loop_id] = sum(vals) / len(vals)
    nominal_u = sum(memory.get(t.loop_id, t.est_exec) / t.period for t in ts.tasks)
    return nominal_u / window.alpha


def requested_utilization(ts: TaskSet, lam: float, alpha: float) -> float:
    """Demand ``lam * w_hat / alpha``; exceeds 1 under overload."""
    return lam * estimated_workload(ts) / alpha


class SpeedPolicy(Protocol):
    def initial_speed(self) -> float: ...

    def on_window(self, window: UtilizationWindow) -> float:
        """Speed for the next window, given the one that just ended."""
        ...


@dataclass
class ConstantSpeed:
    alpha: float

    def initial_speed(self) -> float:
        return self.alpha

    def on_window(self, window: UtilizationWindow) -> float:
        return self.alpha


@dataclass
class ScheduleTrace:
    tasks: TaskSet
    horizon: float
    window_length: float
    jobs: list[Job]
    windows: list[UtilizationWindow]

    def jobs_of(self, loop_id: int) -> list[Job]:
        return [j for j in self.jobs if j.loop_id == loop_id]

    @property
    def miss_count(self) -> int:
        return sum(1 for j in self.jobs if j.absolute_deadline <= self.horizon + MISS_TOL and j.missed)

    def misses_by(self, t: float) -> int:
        """Jobs with deadline <= t that had not completed by their deadline."""
        return sum(
            1 for j in self.jobs if j.absolute_deadline <= t + MISS_TOL and j.missed
        )

    def alpha_at(self, t: float) -> float:
        i = min(int(t / self.window_length), len(self.windows) - 1)
        return self.windows[i].alpha


def _ticks(horizon: float, step: float) -> int:
    n = horizon / step
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise ValueError(f"horizon {horizon} is not a multiple of {step}")
    return int(round(n))


def run_schedule(
    ts: TaskSet,
    sched: LambdaSchedule,
    policy: SpeedPolicy,
    horizon: float,
    window_length: float = 0.1,
) -> ScheduleTrace:
    """Simulate EDF on ``[0, horizon]`` with synchronized release at t = 0.

    Late jobs are never aborted; they finish and count as misses.  At equal
    times completions go first, then the manager, then releases; equal
    deadlines break on ``loop_id``.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    n_windows = _ticks(horizon, window_length)
    tasks = list(ts.tasks)
    jobs: list[Job] = []
    windows: list[UtilizationWindow] = []
    next_k = [0] * len(tasks)
    ready: list[tuple[float, int, int, Job]] = []  # (deadline, loop_id, index, job)

    alpha = policy.initial_speed()
    w_idx = 0

    def open_window(idx, a):
        t0 = idx * window_length
        return UtilizationWindow(
            t0, window_length, a, sched.mean_over(t0, min(t0 + window_length, horizon))
        )

    win = open_window(0, alpha)
    t = 0.0

    def next_release(i):
        return next_k[i] * tasks[i].period

    def release_due(now):
        for i, task in enumerate(tasks):
            while next_release(i) <= now + _EPS and next_release(i) < horizon - _EPS:
                r = next_release(i)
                lam = sched.at(r)
                demand = lam * task.est_exec
                job = Job(task.loop_id, next_k[i], r, r + task.period, demand, demand)
                jobs.append(job)
                heapq.heappush(ready, (job.absolute_deadline, task.loop_id, job.index, job))
                next_k[i] += 1

    release_due(0.0)
    while True:
        t_tick = (w_idx + 1) * window_length
        t_rel = min(
            (next_release(i) for i in range(len(tasks)) if next_release(i) < horizon - _EPS),
            default=math.inf,
        )
        running = ready[0][3] if ready else None
        t_done = t + running.remaining / alpha if running else math.inf
        t_next = min(t_tick, t_rel, t_done)

        if running is not None:
            dt = t_next - t
            if dt > 0:
                running.remaining -= alpha * dt
                running.exec_intervals.append((t, t_next, alpha))
                win.busy_time += dt
            if t_done <= t_next + _EPS:
                running.remaining = 0.0
                running.completion_time = t_next
                heapq.heappop(ready)
                wall = sum(b - a for a, b, _ in running.exec_intervals)
                win.completed.append((running.loop_id, running.nominal_demand, wall))
        t = t_next

        if t_tick <= t + _EPS:
            for _, _, _, job in ready:
                win.backlog += job.remaining
                if job.absolute_deadline <= t + _EPS:
                    win.overdue += job.remaining
            windows.append(win)
            w_idx += 1
            if w_idx >= n_windows:
                break
            alpha = policy.on_window(win)
            win = open_window(w_idx, alpha)
        release_due(t)

    return ScheduleTrace(ts, horizon, window_length, jobs, windows)
