"""Feedback dynamic voltage scaling for real-time control tasks.

Simulates control loops sharing one variable-speed CPU under EDF, with a
PI power manager that regulates CPU utilization, and measures CPU energy
against quality of control.
"""
from .pmdesign import PiGains, PolePair, closed_loop_poles, is_stable, solve_pi_gains
from .scenario import (
    SCHEMES,
    CtdvsConfig,
    Scenario,
    SimTrace,
    compare_schemes,
    default_scenario,
    run_all,
    run_scenario,
)
from .taskmodel import LambdaSchedule, TaskSet, TaskSpec

__version__ = "0.1.0"

__all__ = [
    "SCHEMES",
    "CtdvsConfig",
    "LambdaSchedule",
    "PiGains",
    "PolePair",
    "Scenario",
    "SimTrace",
    "TaskSet",
    "TaskSpec",
    "closed_loop_poles",
    "compare_schemes",
    "default_scenario",
    "is_stable",
    "run_all",
    "run_scenario",
    "solve_pi_gains",
]
