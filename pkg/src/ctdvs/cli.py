"""Command-line front end.

    ctdvs design  --k-lambda 1.5 --pole-a 0.3 --pole-b 0.1 [--json]
    ctdvs design  --k-lambda 1.5 --kp 0.6 --ki 1.133333
    ctdvs run     [--scenario FILE] --scheme ctdvs [--seed N] [--out DIR] [--emit-plots]
    ctdvs compare [--scenario FILE] [--seed N] [--out DIR] [--parallel] [--emit-plots]
    ctdvs scenario            # print the shipped default scenario file

Exit codes: 0 success, 2 usage, 3 scenario validation, 4 synthesis
failure, 5 I/O.  Outputs go to ``--out``, else ``$CTDVS_OUT``, else
``./ctdvs-out``.  Nothing is written unless every run succeeded.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_SYNTHESIS, EXIT_IO = 0, 2, 3, 4, 5
OUT_ENV = "CTDVS_OUT"
DEFAULT_OUT = "ctdvs-out"


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def _finite(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    from .scenario import SCHEMES

    p = argparse.ArgumentParser(
        prog="ctdvs",
        description="Feedback DVS for real-time control tasks: design, simulate, compare.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="PI gains for the power manager from desired poles")
    d.add_argument("--k-lambda", type=_finite, required=True, help="assumed maximum lambda")
    d.add_argument("--pole-a", type=_finite, help="pole pair a +/- b i (design form)")
    d.add_argument("--pole-b", type=_finite)
    d.add_argument("--kp", type=_finite, help="analyze given gains instead")
    d.add_argument("--ki", type=_finite)
    d.add_argument("--json", action="store_true", help="print a JSON record")

    def scenario_args(sp):
        sp.add_argument("--scenario", type=Path,
                        help="scenario TOML file (default: the shipped default scenario)")
        sp.add_argument("--seed", type=_seed, help="override the scenario seed")
        sp.add_argument("--out", type=Path,
                        help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
        sp.add_argument("--emit-plots", action="store_true",
                        help="also write SVG plots rendered from the CSV")

    r = sub.add_parser("run", help="simulate one scheme and write its trace CSV")
    scenario_args(r)
    r.add_argument("--scheme", required=True, choices=SCHEMES)

    c = sub.add_parser("compare", help="run all schemes and write a comparison report")
    scenario_args(c)
    c.add_argument("--parallel", action="store_true", help="one process per scheme")

    sub.add_parser("scenario", help="print the default scenario file")
    return p


def _load(args):
    from .scenariofile import ScenarioError, load_default_scenario, load_scenario

    try:
        sc = load_scenario(args.scenario) if args.scenario else load_default_scenario()
    except ScenarioError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None
    except OSError as exc:
        raise CliError(f"cannot read scenario: {exc}", EXIT_IO) from None
    if args.seed is not None:
        sc = sc.with_(seed=args.seed)
    return sc


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _prepare_out(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {path}: {exc}", EXIT_IO) from None
    if not os.access(path, os.W_OK):
        raise CliError(f"output directory {path} is not writable", EXIT_IO)
    return path


def _simulate(fn, *a, **kw):
    from .controlmath import SynthesisError
    from .taskmodel import TaskModelError

    try:
        return fn(*a, **kw)
    except SynthesisError as exc:
        raise CliError(f"controller synthesis failed: {exc}", EXIT_SYNTHESIS) from None
    except TaskModelError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None


def cmd_design(args) -> int:
    from .pmdesign import PiGains, PolePair, closed_loop_poles, closed_loop_roots, is_stable
    from .pmdesign import solve_pi_gains

    by_poles = args.pole_a is not None or args.pole_b is not None
    by_gains = args.kp is not None or args.ki is not None
    if by_poles == by_gains:
        raise CliError("give either --pole-a/--pole-b or --kp/--ki", EXIT_USAGE)
    if by_poles and args.pole_a is None:
        raise CliError("--pole-a is required with --pole-b", EXIT_USAGE)
    if by_gains and (args.kp is None or args.ki is None):
        raise CliError("--kp and --ki go together", EXIT_USAGE)
    if not args.k_lambda > 0:
        raise CliError("--k-lambda must be positive", EXIT_USAGE)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if by_poles:
            gains = solve_pi_gains(args.k_lambda, PolePair(args.pole_a, args.pole_b or 0.0))
        else:
            gains = PiGains(args.kp, args.ki, args.k_lambda)
    poles = closed_loop_poles(gains)
    roots = closed_loop_roots(gains)
    stable = is_stable(gains)
    record = {
        "k_lambda": gains.k_lambda,
        "kp": gains.kp,
        "ki": gains.ki,
        "char_poly": list(gains.char_poly()),
        "pole_pair": [poles.a, poles.b] if isinstance(poles, PolePair) else None,
        "roots": [[r.real, r.imag] for r in roots],
        "radius": max(abs(r) for r in roots),
        "stable": stable,
        "warnings": [str(w.message) for w in caught],
    }
    if args.json:
        print(json.dumps(record, indent=2))
    else:
        _, c1, c0 = record["char_poly"]
        print(f"K_lambda   {gains.k_lambda:.6g}")
        print(f"Kp         {gains.kp:.9g}")
        print(f"Ki         {gains.ki:.9g}")
        print(f"char poly  z^2 {c1:+.6g} z {c0:+.6g}")
        if isinstance(poles, PolePair):
            print(f"pole pair  a = {poles.a:.6g}, b = {poles.b:.6g} (design form)")
        print("roots      " + ", ".join(f"{r.real:.6g}{r.imag:+.6g}i" for r in roots))
        print(f"radius     {record['radius']:.6g}")
        print(f"verdict    {'stable' if stable else 'UNSTABLE'}")
        for w in record["warnings"]:
            print(f"warning    {w}")
    return EXIT_OK


def cmd_run(args) -> int:
    from .plots import render_plots
    from .scenario import run_scenario
    from .traceio import write_trace_csv

    sc = _load(args)
    trace = _simulate(run_scenario, sc, args.scheme)
    out = _prepare_out(_out_dir(args))
    try:
        path = write_trace_csv(trace, out)
        written = [path]
        if args.emit_plots:
            written += render_plots([path], out, f"{trace.scheme}_{trace.seed}")
    except OSError as exc:
        raise CliError(f"cannot write output: {exc}", EXIT_IO) from None
    for p in written:
        print(p)
    print(
        f"{trace.scheme}: average energy {100 * trace.average_energy:.2f}%, "
        f"final sum J {trace.cost_total[-1]:.5g}, misses {int(trace.misses[-1])}"
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    from .plots import render_plots
    from .scenario import SCHEMES, compare_schemes, run_all
    from .traceio import atomic_write_text, report_to_csv, report_to_text, write_trace_csv

    sc = _load(args)
    traces = _simulate(run_all, sc, SCHEMES, parallel=args.parallel)
    report = compare_schemes(traces)
    text = report_to_text(report)
    out = _prepare_out(_out_dir(args))
    try:
        paths = [write_trace_csv(tr, out) for tr in traces.values()]
        atomic_write_text(out / f"compare_{sc.seed}.csv", report_to_csv(report))
        atomic_write_text(out / f"compare_{sc.seed}.txt", text)
        if args.emit_plots:
            render_plots(paths, out, f"compare_{sc.seed}")
    except OSError as exc:
        raise CliError(f"cannot write output: {exc}", EXIT_IO) from None
    sys.stdout.write(text)
    return EXIT_OK


def cmd_scenario(args) -> int:
    from .scenariofile import default_scenario_text

    sys.stdout.write(default_scenario_text())
    return EXIT_OK


_COMMANDS = {"design": cmd_design, "run": cmd_run, "compare": cmd_compare,
             "scenario": cmd_scenario}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"ctdvs: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
