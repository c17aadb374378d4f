"""Normalized CPU energy models and time-weighted energy accounting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

EnergyModel = Literal["quadratic", "cmos"]


@dataclass(frozen=True)
class CmosParams:
    """First-order CMOS delay model constants (any consistent units)."""

    capacitance: float
    v_threshold: float
    v_max: float
    sample_interval: float
    f_max: float

    def __post_init__(self):
        if not 0.0 <= self.v_threshold < self.v_max:
            raise ValueError("need 0 <= v_threshold < v_max")
        if min(self.capacitance, self.sample_interval, self.f_max) <= 0:
            raise ValueError("capacitance, sample_interval and f_max must be positive")

    @property
    def v0(self) -> float:
        return (self.v_max - self.v_threshold) ** 2 / self.v_max


def energy_quadratic(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0, 1]")
    return alpha * alpha


def energy_cmos(p: CmosParams, alpha: float) -> float:
    """Energy per sample at normalized speed ``alpha`` (first-order CMOS)."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside (0, 1]")
    r = p.v_threshold / p.v0
    radicand = alpha * r + (alpha / 2.0) ** 2
    assert radicand >= 0.0
    bracket = r + alpha / 2.0 + math.sqrt(radicand)
    return p.capacitance * p.v0**2 * p.sample_interval * p.f_max * alpha * bracket**2


def energy_cmos_normalized(p: CmosParams, alpha: float) -> float:
    """:func:`energy_cmos` divided by its full-speed value."""
    return energy_cmos(p, alpha) / energy_cmos(p, 1.0)


def energy_function(
    model: EnergyModel = "quadratic", params: CmosParams | None = None
) -> Callable[[float], float]:
    if model == "quadratic":
        return energy_quadratic
    if model == "cmos":
        if params is None:
            raise ValueError("the cmos energy model needs CmosParams")
        return lambda a: energy_cmos_normalized(params, a)
    raise ValueError(f"unknown energy model {model!r}")


@dataclass
class EnergyLedger:
    """Piecewise-constant speed history and its normalized energy."""

    energy: Callable[[float], float] = energy_quadratic
    segments: list[tuple[float, float]] = field(default_factory=list)
    total_time: float = 0.0
    total_energy: float = 0.0

    def add(self, duration: float, alpha: float) -> None:
        if duration < 0:
            raise ValueError("negative segment duration")
        self.segments.append((duration, alpha))
        self.total_time += duration
        self.total_energy += duration * self.energy(alpha)

    def average(self) -> float:
        return ledger_average(self)


def ledger_average(ledger: EnergyLedger) -> float:
    """Time-weighted mean of ``E(alpha(t))``."""
    if ledger.total_time <= 0:
        raise ValueError("empty energy ledger")
    return ledger.total_energy / ledger.total_time
