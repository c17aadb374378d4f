"""Task-set description and the static speed formulas of the DVS schemes.

All times are seconds (floats).  A speed factor ``alpha`` is the normalized
CPU speed in ``[alpha_min, 1]``; it is kept as a plain float.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Sequence

DEFAULT_ALPHA_MIN = 0.1


class TaskModelError(ValueError):
    """Raised when a task set, schedule or speed violates its invariants."""


@dataclass(frozen=True)
class TaskSpec:
    """One periodic control task; relative deadline equals ``period``."""

    period: float
    est_exec: float  # estimated nominal execution time at full speed
    wcet: float
    loop_id: int

    def __post_init__(self):
        if not 0.0 < self.est_exec <= self.wcet <= self.period:
            raise TaskModelError(
                f"task {self.loop_id}: need 0 < est_exec <= wcet <= period, "
                f"got {self.est_exec}, {self.wcet}, {self.period}"
            )


@dataclass(frozen=True)
class TaskSet:
    tasks: tuple[TaskSpec, ...]

    def __init__(self, tasks: Sequence[TaskSpec]):
        tasks = tuple(tasks)
        ids = [t.loop_id for t in tasks]
        if len(set(ids)) != len(ids):
            raise TaskModelError(f"duplicate loop ids: {ids}")
        object.__setattr__(self, "tasks", tasks)

    def __len__(self):
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks)

    @property
    def wcet_utilization(self) -> float:
        return sum(t.wcet / t.period for t in self.tasks)

    @property
    def max_period(self) -> float:
        return max(t.period for t in self.tasks)


@dataclass(frozen=True)
class LambdaSchedule:
    """Piecewise-constant execution time factor.

    ``breakpoints`` is a sequence of ``(start_time, lambda)``; each value holds
    until the next start time.  The first breakpoint must start at 0.
    """

    breakpoints: tuple[tuple[float, float], ...]
    _starts: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __init__(self, breakpoints: Sequence[tuple[float, float]]):
        bps = tuple((float(t), float(lam)) for t, lam in breakpoints)
        if not bps:
            raise TaskModelError("lambda schedule needs at least one breakpoint")
        if bps[0][0] != 0.0:
            raise TaskModelError("lambda schedule must start at t = 0")
        starts = [t for t, _ in bps]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise TaskModelError("lambda breakpoints must be strictly increasing")
        if any(lam <= 0 for _, lam in bps):
            raise TaskModelError("lambda values must be positive")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "_starts", tuple(starts))

    @classmethod
    def constant(cls, lam: float) -> "LambdaSchedule":
        return cls([(0.0, lam)])

    @property
    def k_lambda(self) -> float:
        return max(lam for _, lam in self.breakpoints)

    def at(self, t: float) -> float:
        i = bisect.bisect_right(self._starts, t) - 1
        return self.breakpoints[max(i, 0)][1]

    def mean_over(self, t0: float, t1: float) -> float:
        """Time-weighted mean of lambda over ``[t0, t1]``."""
        if t1 <= t0:
            return self.at(t0)
        total = 0.0
        edges = [t0] + [s for s in self._starts if t0 < s < t1] + [t1]
        for a, b in zip(edges, edges[1:]):
            total += self.at(a) * (b - a)
        return total / (t1 - t0)


def clamp_speed(alpha: float, alpha_min: float = DEFAULT_ALPHA_MIN) -> float:
    return min(1.0, max(alpha_min, alpha))


def check_speed(alpha: float, alpha_min: float = DEFAULT_ALPHA_MIN) -> float:
    """Validate a design-time speed factor (no silent clamping)."""
    if not alpha_min <= alpha <= 1.0:
        raise TaskModelError(f"speed {alpha} outside [{alpha_min}, 1]")
    return float(alpha)


def estimated_workload(ts: TaskSet) -> float:
    return sum(t.est_exec / t.period for t in ts.tasks)


def dvs1_speed(ts: TaskSet, alpha_min: float = DEFAULT_ALPHA_MIN) -> float:
    """WCET-based static speed."""
    u = ts.wcet_utilization
    if u > 1.0 + 1e-12:
        raise TaskModelError(f"WCET utilization {u:.4f} > 1: DVS-1 infeasible")
    return clamp_speed(u, alpha_min)


def dvs2_speed(ts: TaskSet, alpha_min: float = DEFAULT_ALPHA_MIN) -> float:
    """Speed from estimated execution times."""
    w = estimated_workload(ts)
    if w > 1.0 + 1e-12:
        raise TaskModelError(f"estimated workload {w:.4f} > 1: DVS-2 infeasible")
    return clamp_speed(w, alpha_min)


def edf_feasible_at_speed(ts: TaskSet, lam: float, alpha: float) -> bool:
    """EDF utilization bound at speed ``alpha``: lam * w_hat <= alpha."""
    if lam <= 0:
        raise TaskModelError("lambda must be positive")
    # absolute slack absorbs float rounding at the exact boundary
    return lam * estimated_workload(ts) <= alpha + 1e-12
