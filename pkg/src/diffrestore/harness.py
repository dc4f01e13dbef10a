"""Experiment harness: the method-by-severity restoration matrix.

Runs every (task, severity, method, item) combination of an
`ExperimentSpec`: degrade the clean item, restore it with the method's
preset and score the result. Emits per-item rows, mean-per-cell
summaries and the degraded-input baseline rows ("clipped" / "lpf"),
with figures rendered alongside the CSV output.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .audio import Signal, load_wav
from .config import RunConfig, load_preset
from .denoisers import (
    Denoiser,
    load_shrinkage,
    flat_gaussian_prior,
    pink_gaussian_prior,
    train_shrinkage,
)
from .metrics import MetricReport, lsd, sdr, si_sdr
from .operators import BrickwallLPF, Measurement, clip_for_sdr, degrade
from .sampler import restore
from .synth import SyntheticVoiceSpec, synth_corpus

__all__ = [
    "ExperimentSpec",
    "MatrixResult",
    "load_dataset",
    "resolve_denoiser",
    "make_measurement",
    "baseline_method_name",
    "run_matrix",
]

TASKS = ("declip", "bwe")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment matrix: tasks with severities, method presets, data."""

    tasks: tuple[tuple[str, float], ...] = (
        ("declip", 5.0),
        ("declip", 10.0),
        ("bwe", 3000.0),
        ("bwe", 5000.0),
    )
    methods: tuple[str, ...] = ("rg", "rg-dc", "rg-drho-dc", "pigdm-dc", "rg-drho-dc-rp")
    dataset: str = "synthetic:20"
    seed: int = 0
    sigma_y: float = 0.0

    def __post_init__(self):
        for task, severity in self.tasks:
            if task not in TASKS:
                raise ValueError(f"unknown task {task!r} (expected one of {TASKS})")
            if severity <= 0:
                raise ValueError(f"severity must be positive, got {severity} for {task}")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate method names in experiment spec")


@dataclass
class MatrixResult:
    """Everything a matrix run produced, before it is written out."""

    rows: list[MetricReport] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    failed_cells: list[tuple[str, str, str]] = field(default_factory=list)


def load_dataset(
    dataset: str, seed: int, synth_spec: SyntheticVoiceSpec | None = None
) -> list[tuple[str, Signal]]:
    """Resolve `synthetic:<n>` or a directory of WAV files into named items."""
    if dataset.startswith("synthetic:"):
        n_items = int(dataset.split(":", 1)[1])
        spec = synth_spec if synth_spec is not None else SyntheticVoiceSpec(n_items=n_items)
        if spec.n_items != n_items:
            spec = replace(spec, n_items=n_items)
        return [(f"synthetic-{i:03d}", sig) for i, sig in enumerate(synth_corpus(spec, seed))]
    root = Path(dataset)
    if not root.is_dir():
        raise ValueError(f"dataset {dataset!r} is neither synthetic:<n> nor a directory")
    paths = sorted(root.glob("*.wav"))
    if not paths:
        raise ValueError(f"no .wav files found in {dataset!r}")
    return [(p.stem, load_wav(p)) for p in paths]


def resolve_denoiser(
    spec: str, length: int, sample_rate: int, training_set: list[Signal] | None = None
) -> Denoiser:
    """Turn a CLI denoiser spec into a denoiser instance.

    Accepts `gaussian:flat`, `gaussian:pink`, `train` (fit shrinkage
    gains to `training_set`) or a path to a serialized shrinkage model.
    """
    if spec == "gaussian:flat":
        return flat_gaussian_prior(length, sample_rate)
    if spec == "gaussian:pink":
        return pink_gaussian_prior(length, sample_rate)
    if spec == "train":
        if not training_set:
            raise ValueError("denoiser spec 'train' needs a training corpus")
        from .schedule import build_schedule

        return train_shrinkage(training_set, build_schedule(300))
    return load_shrinkage(spec)


def make_measurement(x: Signal, task: str, severity: float, sigma_y: float, seed: int) -> Measurement:
    """Degrade one clean item for a (task, severity) cell."""
    if task == "declip":
        op, _ = clip_for_sdr(x, severity)
    elif task == "bwe":
        op = BrickwallLPF(severity)
    else:
        raise ValueError(f"unknown task {task!r}")
    return degrade(op, x, sigma_y=sigma_y, seed=seed)


def baseline_method_name(task: str) -> str:
    return "clipped" if task == "declip" else "lpf"


def _metrics_row(name, task, severity, method, reference, estimate) -> MetricReport:
    return MetricReport(
        file=name,
        task=task,
        severity=f"{severity:g}",
        method=method,
        si_sdr_db=si_sdr(reference, estimate),
        sdr_db=sdr(reference, estimate),
        lsd=lsd(reference, estimate),
    )


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def run_matrix(
    spec: ExperimentSpec,
    denoiser: Denoiser,
    run_configs: dict[str, RunConfig] | None = None,
    synth_spec: SyntheticVoiceSpec | None = None,
    log=lambda msg: print(msg, file=sys.stderr),
) -> MatrixResult:
    """Run the full matrix; per-item failures are recorded, not fatal.

    `run_configs` maps method names to configurations; methods without
    an entry resolve to the shipped preset of the same name. A cell
    whose items all fail lands in `failed_cells` so the caller can exit
    nonzero.
    """
    items = load_dataset(spec.dataset, spec.seed, synth_spec)
    configs = {
        method: (run_configs or {}).get(method) or load_preset(method)
        for method in spec.methods
    }
    result = MatrixResult()

    for t_idx, (task, severity) in enumerate(spec.tasks):
        measurements = []
        for i_idx, (name, clean) in enumerate(items):
            meas_seed = _derive_seed(spec.seed, t_idx, i_idx, 0xD15E)
            measurements.append(make_measurement(clean, task, severity, spec.sigma_y, meas_seed))

        # Degraded-input baseline row for every item.
        for (name, clean), meas in zip(items, measurements):
            result.rows.append(
                _metrics_row(name, task, severity, baseline_method_name(task), clean, meas.y)
            )

        for m_idx, method in enumerate(spec.methods):
            cfg = configs[method]
            ok = 0
            for i_idx, ((name, clean), meas) in enumerate(zip(items, measurements)):
                sampler_cfg = replace(
                    cfg.sampler, seed=_derive_seed(spec.seed, t_idx, m_idx, i_idx)
                )
                try:
                    restored, _ = restore(meas, denoiser, sampler_cfg, cfg.schedule)
                    result.rows.append(
                        _metrics_row(name, task, severity, method, clean, restored)
                    )
                    ok += 1
                except Exception as exc:
                    result.failures.append(
                        f"{task}@{severity:g}/{method}/{name}: {type(exc).__name__}: {exc}"
                    )
                    result.rows.append(
                        MetricReport(
                            file=name,
                            task=task,
                            severity=f"{severity:g}",
                            method=method,
                            si_sdr_db=math.nan,
                            sdr_db=math.nan,
                            lsd=math.nan,
                        )
                    )
            if ok == 0 and items:
                result.failed_cells.append((task, f"{severity:g}", method))
            log(f"[matrix] {task}@{severity:g} {method}: {ok}/{len(items)} items ok")

    result.summary = summarize(result.rows)
    return result


def summarize(rows: list[MetricReport]) -> list[dict]:
    """Mean per (task, severity, method) cell over items with finite metrics."""
    order: list[tuple[str, str, str]] = []
    groups: dict[tuple[str, str, str], list[MetricReport]] = {}
    for row in rows:
        key = (row.task, row.severity, row.method)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)

    def mean(values):
        finite = [v for v in values if not math.isnan(v)]
        return float(np.mean(finite)) if finite else math.nan

    summary = []
    for key in order:
        rows_in_cell = groups[key]
        summary.append(
            {
                "task": key[0],
                "severity": key[1],
                "method": key[2],
                "n_items": len(rows_in_cell),
                "si_sdr": mean([r.si_sdr_db for r in rows_in_cell]),
                "sdr": mean([r.sdr_db for r in rows_in_cell]),
                "lsd": mean([r.lsd for r in rows_in_cell]),
            }
        )
    return summary
