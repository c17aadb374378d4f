"""CSV emission and loading of run traces and comparison reports.

Trace files look like::

    # ctdvs-trace v1
    # scheme=ctdvs seed=7 fingerprint=0123abcd...
    t[s],alpha[1],...,diverged_3[flag]
    0.1,1,...

Numbers use ``repr``-free fixed formatting so that equal runs give
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .scenario import ComparisonReport, SimTrace

SCHEMA_VERSION = 1
_MAGIC = f"# ctdvs-trace v{SCHEMA_VERSION}"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary sibling and rename, so readers never see a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_filename(scheme: str, seed: int) -> str:
    return f"trace_{scheme}_{seed}.csv"


def trace_to_csv(trace: SimTrace) -> str:
    buf = io.StringIO()
    buf.write(_MAGIC + "\n")
    buf.write(f"# scheme={trace.scheme} seed={trace.seed} fingerprint={trace.fingerprint}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{name}[{unit}]" for name, unit in trace.columns()])
    for row in trace.rows():
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_trace_csv(trace: SimTrace, out_dir: str | os.PathLike) -> Path:
    path = Path(out_dir) / trace_filename(trace.scheme, trace.seed)
    atomic_write_text(path, trace_to_csv(trace))
    return path


def read_trace_csv(path: str | os.PathLike) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Return ``(meta, columns)``; column keys drop the unit suffix."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ValueError(f"{path}: not a ctdvs trace (expected {_MAGIC!r})")
    meta = dict(item.split("=", 1) for item in lines[1].lstrip("# ").split())
    reader = csv.reader(lines[2:])
    header = next(reader)
    names = [h.split("[", 1)[0] for h in header]
    data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    data = data.reshape(-1, len(names))
    return meta, {n: data[:, i] for i, n in enumerate(names)}


_REPORT_COLS = [
    ("scheme", ""),
    ("avg_energy", "1"),
    ("energy_saving", "1"),
    ("final_cost", "cost"),
    ("misses", "count"),
    ("diverged", "flag"),
    ("max_requested_util", "1"),
]


def report_to_csv(report: ComparisonReport) -> str:
    buf = io.StringIO()
    buf.write(f"# ctdvs-compare v{SCHEMA_VERSION}\n")
    buf.write(f"# seed={report.seed} fingerprint={report.fingerprint}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{n}[{u}]" if u else n for n, u in _REPORT_COLS])
    for r in report.rows:
        w.writerow([
            r.scheme, _fmt(r.avg_energy), _fmt(r.energy_saving), _fmt(r.final_cost),
            str(r.misses), str(int(r.diverged)), _fmt(r.max_requested_util),
        ])
    return buf.getvalue()


def report_to_text(report: ComparisonReport) -> str:
    head = f"{'scheme':<7} {'energy':>8} {'saving':>8} {'sum J':>12} {'misses':>7} {'diverged':>9} {'max U_req':>9}"
    out = [f"seed {report.seed}  scenario {report.fingerprint}", head, "-" * len(head)]
    for r in report.rows:
        out.append(
            f"{r.scheme:<7} {100 * r.avg_energy:7.2f}% {100 * r.energy_saving:7.2f}% "
            f"{r.final_cost:12.5g} {r.misses:7d} {('yes' if r.diverged else 'no'):>9} "
            f"{100 * r.max_requested_util:8.1f}%"
        )
    return "\n".join(out) + "\n"
