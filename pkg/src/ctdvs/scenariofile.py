"""TOML scenario files with unit-suffixed durations.

See ``data/default.toml`` for the documented format.  Everything is
validated before any simulation starts; problems raise
:class:`ScenarioError` carrying a line/column when one is known.
"""
from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

import tomli

from .energy import CmosParams
from .plantlab import PendulumParams
from .scenario import CtdvsConfig, Scenario
from .taskmodel import LambdaSchedule, TaskModelError, TaskSet, TaskSpec

_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6}
_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zµ]+)\s*$")
_TOP_KEYS = {"horizon", "seed", "micro_step", "alpha_min", "energy_model",
             "task", "lambda", "ctdvs", "plant", "cmos"}


class ScenarioError(ValueError):
    def __init__(self, msg: str, source: str = "<scenario>", line: int | None = None,
                 col: int | None = None):
        self.source, self.line, self.col = source, line, col
        where = source if line is None else f"{source}:{line}:{col or 1}"
        super().__init__(f"{where}: {msg}")


class _Ctx:
    def __init__(self, text: str, source: str):
        self.lines = text.splitlines()
        self.source = source

    def locate(self, key: str, table: str | None = None, index: int = 0):
        """Best-effort (line, col) of ``key = ...`` in the index-th ``[table]``."""
        in_table = table is None
        seen = -1
        pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
        for n, ln in enumerate(self.lines, 1):
            s = ln.strip()
            if s.startswith("["):
                name = s.strip("[]").strip()
                if name == table:
                    seen += 1
                in_table = name == table and seen == index
                continue
            if in_table and pat.match(ln):
                return n, ln.index(key) + 1
        return None, None

    def fail(self, msg, key=None, table=None, index=0):
        line, col = self.locate(key, table, index) if key else (None, None)
        raise ScenarioError(msg, self.source, line, col)


def parse_duration(value, what: str = "duration") -> float:
    """Seconds from a number or a ``"<number> <unit>"`` string."""
    if isinstance(value, bool):
        raise ValueError(f"{what}: expected a duration, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _QTY.match(value)
        if m and m.group(2) in _UNITS:
            return float(m.group(1)) * _UNITS[m.group(2)]
    raise ValueError(f"{what}: cannot read {value!r} as a duration (use s, ms or us)")


_REQUIRED = object()


def _where(table, index):
    return "top level" if table is None else f"[{table}] entry {index + 1}"


def _number(ctx, d, key, table, default=_REQUIRED, kind=float, index=0):
    if key not in d:
        if default is _REQUIRED:
            ctx.fail(f"{_where(table, index)}: missing required key {key!r}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        ctx.fail(f"{key} must be a number, got {v!r}", key, table, index)
    if kind is int and not isinstance(v, int):
        ctx.fail(f"{key} must be an integer", key, table, index)
    return kind(v)


def _dur(ctx, d, key, table, default=_REQUIRED, index=0):
    if key not in d:
        if default is _REQUIRED:
            ctx.fail(f"{_where(table, index)}: missing required key {key!r}")
        return default
    try:
        return parse_duration(d[key], key)
    except ValueError as exc:
        ctx.fail(str(exc), key, table, index)


def _vector(ctx, d, key, table, shape, default):
    import numpy as np

    if key not in d:
        return default
    try:
        arr = np.array(d[key], dtype=float)
    except (TypeError, ValueError):
        ctx.fail(f"{key} must be numeric", key, table)
    if arr.shape != shape:
        ctx.fail(f"{key} must have shape {shape}, got {arr.shape}", key, table)
    return tuple(map(tuple, arr)) if arr.ndim == 2 else tuple(arr)


def _choice(ctx, d, key, table, options, default):
    v = d.get(key, default)
    if v not in options:
        ctx.fail(f"{key} must be one of {sorted(options)}, got {v!r}", key, table)
    return v


def _table(ctx, doc, key):
    v = doc.get(key, {})
    if not isinstance(v, dict):
        ctx.fail(f"{key} must be a table", key)
    return v


def scenario_from_toml(text: str, source: str = "<scenario>") -> Scenario:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        text_lines = text.splitlines() or [""]
        m = re.search(r"\(at line (\d+), column (\d+)\)", str(exc))
        loc = tuple(map(int, m.groups())) if m else (len(text_lines), len(text_lines[-1]) + 1)
        msg = re.sub(r"\s*\(at .*\)$", "", str(exc))
        raise ScenarioError(msg, source, *loc) from None
    ctx = _Ctx(text, source)
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        k = sorted(unknown)[0]
        ctx.fail(f"unknown key {k!r}", k)

    raw_tasks = doc.get("task")
    if not isinstance(raw_tasks, list) or not raw_tasks:
        ctx.fail("need at least one [[task]] entry", "task")
    tasks = []
    for i, t in enumerate(raw_tasks):
        try:
            tasks.append(TaskSpec(
                _dur(ctx, t, "period", "task", index=i),
                _dur(ctx, t, "est_exec", "task", index=i),
                _dur(ctx, t, "wcet", "task", index=i),
                int(t.get("loop_id", i + 1)),
            ))
        except TaskModelError as exc:
            ctx.fail(str(exc), "period", "task", i)
    try:
        ts = TaskSet(tasks)
    except TaskModelError as exc:
        ctx.fail(str(exc))

    raw_lam = doc.get("lambda")
    if raw_lam is None:
        schedule = LambdaSchedule.constant(1.0)
    else:
        if not isinstance(raw_lam, list) or not raw_lam:
            ctx.fail("lambda must be a list of [[lambda]] entries", "lambda")
        bps = [
            (_dur(ctx, b, "start", "lambda", index=i),
             _number(ctx, b, "value", "lambda", index=i))
            for i, b in enumerate(raw_lam)
        ]
        try:
            schedule = LambdaSchedule(bps)
        except TaskModelError as exc:
            ctx.fail(f"lambda schedule: {exc}", "lambda")

    c = _table(ctx, doc, "ctdvs")
    poles = c.get("poles", [0.3, 0.1])
    if not (isinstance(poles, list) and len(poles) == 2
            and all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in poles)):
        ctx.fail("poles must be [a, b]", "poles", "ctdvs")
    kp = _number(ctx, c, "kp", "ctdvs", default=None)
    ki = _number(ctx, c, "ki", "ctdvs", default=None)
    if (kp is None) != (ki is None):
        ctx.fail("kp and ki must be given together", "ki" if kp is None else "kp", "ctdvs")
    k_lambda = _number(ctx, c, "k_lambda", "ctdvs", default=None)
    if k_lambda is not None and k_lambda <= 0:
        ctx.fail("k_lambda must be positive", "k_lambda", "ctdvs")
    cfg = CtdvsConfig(
        setpoint=_number(ctx, c, "setpoint", "ctdvs", default=0.95),
        period=_dur(ctx, c, "period", "ctdvs", default=0.1),
        poles=(float(poles[0]), float(poles[1])),
        k_lambda=k_lambda,
        kp=kp,
        ki=ki,
        gain_scheduling=_choice(ctx, c, "gain_scheduling", "ctdvs",
                                {"consistent", "literal"}, "consistent"),
        anti_windup=bool(_choice(ctx, c, "anti_windup", "ctdvs", {True, False}, True)),
        sensor=_choice(ctx, c, "sensor", "ctdvs", {"execution", "busy"}, "execution"),
        printed_gains=bool(_choice(ctx, c, "printed_gains", "ctdvs", {True, False}, False)),
    )
    if not 0 < cfg.setpoint <= 1:
        ctx.fail("setpoint must lie in (0, 1]", "setpoint", "ctdvs")
    if cfg.period <= 0:
        ctx.fail("period must be positive", "period", "ctdvs")

    p = _table(ctx, doc, "plant")
    base = PendulumParams()
    plant = PendulumParams(
        a=_vector(ctx, p, "a", "plant", (2, 2), base.a),
        b=_vector(ctx, p, "b", "plant", (2,), base.b),
        c_out=_vector(ctx, p, "c_out", "plant", (2,), base.c_out),
        noise_in=_vector(ctx, p, "noise_in", "plant", (2,), base.noise_in),
        v_intensity=_number(ctx, p, "v_intensity", "plant", default=base.v_intensity),
        e_variance=_number(ctx, p, "e_variance", "plant", default=base.e_variance),
    )
    for key in ("v_intensity", "e_variance"):
        if getattr(plant, key) < 0:
            ctx.fail(f"{key} must be non-negative", key, "plant")
    x0 = _vector(ctx, p, "x0", "plant", (2,), None)

    horizon = _dur(ctx, doc, "horizon", None, default=12.0)
    micro = _dur(ctx, doc, "micro_step", None, default=1e-4)
    if horizon <= 0:
        ctx.fail("horizon must be positive", "horizon")
    if not 0 < micro <= min(t.est_exec for t in ts.tasks):
        ctx.fail("micro_step must be positive and below the shortest execution time",
                 "micro_step")
    for name, step in (("ctdvs.period", cfg.period), ("micro_step", micro)):
        n = horizon / step
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            ctx.fail(f"horizon must be a whole multiple of {name}", "horizon")
    alpha_min = _number(ctx, doc, "alpha_min", None, default=0.1)
    if not 0 < alpha_min <= 1:
        ctx.fail("alpha_min must lie in (0, 1]", "alpha_min")
    seed = _number(ctx, doc, "seed", None, default=0, kind=int)
    if seed < 0:
        ctx.fail("seed must be non-negative", "seed")
    model = _choice(ctx, doc, "energy_model", None, {"quadratic", "cmos"}, "quadratic")
    cmos = None
    if model == "cmos":
        if "cmos" not in doc:
            ctx.fail("energy_model = 'cmos' needs a [cmos] table", "energy_model")
        m = _table(ctx, doc, "cmos")
        try:
            cmos = CmosParams(
                _number(ctx, m, "capacitance", "cmos"),
                _number(ctx, m, "v_threshold", "cmos"),
                _number(ctx, m, "v_max", "cmos"),
                _dur(ctx, m, "sample_interval", "cmos"),
                _number(ctx, m, "f_max", "cmos"),
            )
        except ValueError as exc:
            ctx.fail(f"cmos: {exc}")

    return Scenario(ts, schedule, plant, horizon, seed, micro, alpha_min, model, cmos, x0, cfg)


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file.  I/O errors propagate as ``OSError``."""
    path = Path(path)
    return scenario_from_toml(path.read_text(encoding="utf-8"), str(path))


def default_scenario_text() -> str:
    return resources.files("ctdvs").joinpath("data/default.toml").read_text(encoding="utf-8")


def load_default_scenario() -> Scenario:
    return scenario_from_toml(default_scenario_text(), "default.toml")
