"""SVG line charts rebuilt from written trace CSVs.

Only the CSV is read, so a figure can never disagree with its data file.
"""
from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .traceio import read_trace_csv  # noqa: E402

_STYLE = {
    "svg.hashsalt": "ctdvs",  # stable element ids across runs
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
}
_LABELS = {"dvs0": "DVS-0", "dvs1": "DVS-1", "dvs2": "DVS-2", "ctdvs": "ctDVS"}


def _step(t, y):
    """Window rows as a staircase starting at t = 0."""
    xs, ys = [0.0], [y[0]]
    for i in range(len(t)):
        xs += [t[i]] if i == len(t) - 1 else [t[i], t[i]]
        ys += [y[i]] if i == len(t) - 1 else [y[i], y[i + 1]]
    return xs, ys


def _save(fig, path: Path) -> Path:
    tmp = path.with_name(f".{path.name}.tmp")
    fig.savefig(tmp, format="svg", metadata={"Date": None})
    plt.close(fig)
    os.replace(tmp, path)
    return path


def render_plots(csv_paths, out_dir, tag: str) -> list[Path]:
    """Write ``energy_<tag>.svg``, ``utilization_<tag>.svg``, ``cost_<tag>.svg``."""
    runs = []
    for p in csv_paths:
        meta, cols = read_trace_csv(p)
        runs.append((_LABELS.get(meta["scheme"], meta["scheme"]), cols))
    out_dir = Path(out_dir)
    written = []
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.2))
        for label, c in runs:
            (line,) = ax.plot(*_step(c["t"], 100 * c["energy"]), label=label)
            ax.plot(c["t"], 100 * c["avg_energy"], ls="--", color=line.get_color(), lw=0.8)
        ax.set(xlabel="time [s]", ylabel="normalized CPU energy [%]", ylim=(0, 105))
        ax.legend(loc="lower right", fontsize=8)
        fig.tight_layout()
        written.append(_save(fig, out_dir / f"energy_{tag}.svg"))

        fig, ax = plt.subplots(figsize=(6, 3.2))
        for label, c in runs:
            (line,) = ax.plot(*_step(c["t"], 100 * c["requested_util"]), label=f"{label} requested")
            if label == "ctDVS":
                ax.plot(c["t"], 100 * c["measured_util"], ls=":", color=line.get_color(),
                        label=f"{label} measured")
        ax.axhline(100, color="k", lw=0.6)
        ax.set(xlabel="time [s]", ylabel="CPU utilization [%]")
        ax.legend(loc="upper left", fontsize=8)
        fig.tight_layout()
        written.append(_save(fig, out_dir / f"utilization_{tag}.svg"))

        fig, ax = plt.subplots(figsize=(6, 3.2))
        for label, c in runs:
            ax.plot(c["t"], c["J_total"], label=label)
        ax.set(xlabel="time [s]", ylabel="total control cost")
        if any(c["J_total"].max() > 100 * max(c["J_total"].min(), 1e-12) for _, c in runs):
            ax.set_yscale("symlog", linthresh=1e-3)
        ax.legend(loc="upper left", fontsize=8)
        fig.tight_layout()
        written.append(_save(fig, out_dir / f"cost_{tag}.svg"))
    return written
