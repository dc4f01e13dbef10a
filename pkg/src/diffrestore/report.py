"""Report rendering: summary tables, CSV files and matplotlib figures.

Figures are written next to the delimited output with a non-interactive
backend; everything here is deterministic for fixed inputs so report
bytes can be compared across reruns.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import MetricReport
from .sampler import Trace

__all__ = [
    "write_results_csv",
    "write_summary_csv",
    "format_summary_table",
    "render_summary_figure",
    "render_trace_figure",
]

RESULT_FIELDS = ["file", "task", "severity", "method", "si_sdr", "sdr", "lsd"]


def _fmt(value: float) -> str:
    return "nan" if math.isnan(value) else f"{value:.6f}"


def write_results_csv(rows: list[MetricReport], path) -> None:
    """Per-item rows in the stable file,task,severity,method,si_sdr,sdr,lsd schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_FIELDS)
        for r in rows:
            writer.writerow(
                [r.file, r.task, r.severity, r.method, _fmt(r.si_sdr_db), _fmt(r.sdr_db), _fmt(r.lsd)]
            )


def write_summary_csv(summary: list[dict], path) -> None:
    """Mean-per-cell rows; the fad column stays empty (out of scope here)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task", "severity", "method", "n_items", "si_sdr", "sdr", "lsd", "fad"])
        for cell in summary:
            writer.writerow(
                [
                    cell["task"],
                    cell["severity"],
                    cell["method"],
                    cell["n_items"],
                    _fmt(cell["si_sdr"]),
                    _fmt(cell["sdr"]),
                    _fmt(cell["lsd"]),
                    "",
                ]
            )


def format_summary_table(summary: list[dict]) -> str:
    """Human-readable method-by-severity table, one block per task.

    FAD is reported as a placeholder column: it needs a pretrained
    embedding network, which this package deliberately does not ship.
    """
    lines = []
    tasks = sorted({c["task"] for c in summary})
    for task in tasks:
        cells = [c for c in summary if c["task"] == task]
        severities = sorted({c["severity"] for c in cells}, key=float)
        metric = "si_sdr" if task == "declip" else "lsd"
        header = f"{'method':<18}" + "".join(
            f"{metric + '@' + sev:>16}{'fad@' + sev:>10}" for sev in severities
        )
        lines.append(f"== {task} ==")
        lines.append(header)
        methods = []
        for c in cells:
            if c["method"] not in methods:
                methods.append(c["method"])
        for method in methods:
            row = f"{method:<18}"
            for sev in severities:
                match = [c for c in cells if c["severity"] == sev and c["method"] == method]
                value = match[0][metric] if match else math.nan
                row += f"{_fmt(value):>16}{'--':>10}"
            lines.append(row)
        lines.append("")
    return "\n".join(lines)


def render_summary_figure(summary: list[dict], task: str, path) -> None:
    """Grouped bar chart of the task's headline metric per method and severity."""
    cells = [c for c in summary if c["task"] == task]
    if not cells:
        return
    severities = sorted({c["severity"] for c in cells}, key=float)
    methods = []
    for c in cells:
        if c["method"] not in methods:
            methods.append(c["method"])
    metric = "si_sdr" if task == "declip" else "lsd"
    label = "SI-SDR (dB)" if task == "declip" else "LSD (dB)"

    fig, ax = plt.subplots(figsize=(8, 4.5), dpi=120)
    width = 0.8 / max(len(severities), 1)
    xs = range(len(methods))
    for s_idx, sev in enumerate(severities):
        values = []
        for method in methods:
            match = [c for c in cells if c["severity"] == sev and c["method"] == method]
            values.append(match[0][metric] if match else math.nan)
        offset = (s_idx - (len(severities) - 1) / 2) * width
        ax.bar([x + offset for x in xs], values, width=width, label=f"severity {sev}")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(methods, rotation=20, ha="right")
    ax.set_ylabel(label)
    ax.set_title(f"{task}: mean {label} per method")
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_trace_figure(trace: Trace, path) -> None:
    """Noise level and measurement residual over the sampling iterations."""
    if not trace.records:
        return
    sigmas = [r.sigma for r in trace.records]
    residuals = [max(r.residual, 1e-12) for r in trace.records]
    fig, ax = plt.subplots(figsize=(8, 4), dpi=120)
    ax.semilogy(sigmas, label="sigma", color="tab:gray")
    ax.semilogy(residuals, label="residual", color="tab:blue")
    ax.set_xlabel("iteration (incl. RePaint cycles)")
    ax.set_title("sampling trace")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_criteria_figure(results, path) -> None:
    """Horizontal bar chart of acceptance-criterion runtimes, colored by outcome."""
    if not results:
        return
    names = [r.name for r in results]
    elapsed = [max(r.elapsed_s, 1e-3) for r in results]
    colors = ["tab:green" if r.passed else "tab:red" for r in results]
    fig, ax = plt.subplots(figsize=(8, 0.5 * len(results) + 1.5), dpi=120)
    ax.barh(range(len(results)), elapsed, color=colors)
    ax.set_yticks(range(len(results)))
    ax.set_yticklabels(names)
    ax.set_xscale("log")
    ax.set_xlabel("elapsed (s)")
    ax.set_title("acceptance criteria (green = pass)")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def path_with_suffix(base, suffix: str) -> Path:
    base = Path(base)
    return base.with_name(base.stem + suffix)
