"""Command-line front end.

Subcommands: degrade, restore, evaluate, train-denoiser, run-matrix,
oracle-check. Exit codes: 0 success, 1 usage error, 2 runtime failure,
3 acceptance failure (oracle-check).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import acceptance
from .audio import Signal, load_wav, save_wav
from .config import load_config, load_preset, preset_names
from .denoisers import save_shrinkage, train_shrinkage
from .errors import DiffRestoreError
from .harness import (
    ExperimentSpec,
    load_dataset,
    make_measurement,
    resolve_denoiser,
    run_matrix,
)
from .metrics import lsd, sdr, si_sdr
from .operators import BrickwallLPF, HardClip, Measurement, clip_for_sdr, degrade
from .sampler import restore
from .schedule import build_schedule

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_ACCEPTANCE = 3


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage failures with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _err(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _add_task_flags(parser, require_severity: bool):
    parser.add_argument("--task", choices=("declip", "bwe"), required=True)
    parser.add_argument("--sdr", type=float, help="clipping severity target in dB (declip)")
    parser.add_argument("--fc", type=float, help="low-pass cutoff in Hz (bwe)")
    parser.add_argument("--sigma-y", type=float, default=0.0, help="measurement noise std")


def build_parser() -> _Parser:
    parser = _Parser(prog="diffrestore", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="apply a calibrated degradation to a WAV file")
    _add_task_flags(p, require_severity=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--encoding", choices=("pcm16", "float32"), default="float32")

    p = sub.add_parser("restore", help="restore a degraded WAV file")
    _add_task_flags(p, require_severity=False)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--config", help="run-config file path")
    p.add_argument("--preset", help=f"named preset: {', '.join(preset_names())}")
    p.add_argument(
        "--clip-threshold",
        default="auto",
        help="clip level c for declip; 'auto' infers max|y| (default)",
    )
    p.add_argument(
        "--denoiser",
        default="gaussian:pink",
        help="path to a trained denoiser file, gaussian:flat or gaussian:pink",
    )
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--encoding", choices=("pcm16", "float32"), default="float32")
    p.add_argument("--no-figures", action="store_true", help="skip the trace figure")

    p = sub.add_parser("evaluate", help="score an estimate against a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--csv", help="append machine-readable rows to this CSV file")
    p.add_argument("--task", default="-")
    p.add_argument("--severity", default="-")
    p.add_argument("--method", default="-")

    p = sub.add_parser("train-denoiser", help="fit spectral shrinkage gains to a corpus")
    p.add_argument("--dataset", required=True, help="directory of WAVs or synthetic:<n>")
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--seed", type=int, default=1000)
    p.add_argument("--sigma-bins", type=int, default=16)
    p.add_argument("--steps", type=int, default=300)

    p = sub.add_parser("run-matrix", help="run the method-by-severity experiment matrix")
    p.add_argument(
        "--tasks",
        default="declip:5,declip:10,bwe:3000,bwe:5000",
        help="comma list of task:severity cells",
    )
    p.add_argument(
        "--methods",
        default="rg,rg-dc,rg-drho-dc,pigdm-dc,rg-drho-dc-rp",
        help="comma list of preset names",
    )
    p.add_argument("--dataset", default="synthetic:20")
    p.add_argument(
        "--denoiser",
        default="train",
        help="'train' (fit on --train-dataset), a model path, or gaussian:*",
    )
    p.add_argument("--train-dataset", default="synthetic:24")
    p.add_argument("--train-seed", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-y", type=float, default=0.0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("oracle-check", help="run the acceptance criteria")
    p.add_argument("--full", action="store_true", help="include the slow end-to-end check")
    p.add_argument("--out-dir", help="write criterion results (CSV + figure) here")

    return parser


def _severity_from_args(args) -> float:
    if args.task == "declip":
        if args.sdr is None:
            raise DiffRestoreError("--task declip needs --sdr")
        return args.sdr
    if args.fc is None:
        raise DiffRestoreError("--task bwe needs --fc")
    return args.fc


def cmd_degrade(args) -> int:
    x = load_wav(args.infile)
    severity = _severity_from_args(args)
    if args.task == "declip":
        op, _ = clip_for_sdr(x, severity)
        print(f"calibrated clip threshold c = {op.c:.8g}")
    else:
        op = BrickwallLPF(severity)
    meas = degrade(op, x, sigma_y=args.sigma_y, seed=args.seed)
    save_wav(meas.y, args.outfile, encoding=args.encoding)
    achieved = sdr(x, meas.y)
    print(f"wrote {args.outfile} ({args.task}, SDR {achieved:.3f} dB)")
    return EXIT_OK


def _measurement_from_args(args, y: Signal) -> Measurement:
    if args.task == "declip":
        if args.clip_threshold == "auto":
            c = float(np.abs(y.samples).max())
            if c <= 0:
                raise DiffRestoreError("cannot infer clip threshold from a silent input")
        else:
            c = float(args.clip_threshold)
        op = HardClip(c)
    else:
        if args.fc is None:
            raise DiffRestoreError("--task bwe needs --fc")
        op = BrickwallLPF(args.fc)
    return Measurement(y=y, op=op, sigma_y=args.sigma_y)


def cmd_restore(args) -> int:
    if bool(args.config) == bool(args.preset):
        raise DiffRestoreError("give exactly one of --config or --preset")
    run_cfg = load_config(args.config) if args.config else load_preset(args.preset)
    if args.seed is not None:
        run_cfg = replace(run_cfg, sampler=replace(run_cfg.sampler, seed=args.seed))

    y = load_wav(args.infile)
    meas = _measurement_from_args(args, y)
    denoiser = resolve_denoiser(args.denoiser, len(y), y.sample_rate)

    out, trace = restore(meas, denoiser, run_cfg.sampler, run_cfg.schedule)
    save_wav(out, args.outfile, encoding=args.encoding)

    from .report import path_with_suffix, render_trace_figure

    trace_path = path_with_suffix(args.outfile, ".trace.csv")
    trace.write_csv(trace_path)
    print(f"wrote {args.outfile} and {trace_path}")
    if not args.no_figures:
        fig_path = path_with_suffix(args.outfile, ".trace.png")
        render_trace_figure(trace, fig_path)
        print(f"wrote {fig_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ref = load_wav(args.ref)
    est = load_wav(args.est)
    row = {
        "file": Path(args.est).stem,
        "task": args.task,
        "severity": args.severity,
        "method": args.method,
        "si_sdr": si_sdr(ref, est),
        "sdr": sdr(ref, est),
        "lsd": lsd(ref, est),
    }
    print(
        f"si_sdr={row['si_sdr']:.4f} dB  sdr={row['sdr']:.4f} dB  lsd={row['lsd']:.4f} dB"
    )
    if args.csv:
        path = Path(args.csv)
        new_file = not path.exists()
        with open(path, "a", newline="") as fh:
            writer = csv.writer(fh)
            if new_file:
                writer.writerow(["file", "task", "severity", "method", "si_sdr", "sdr", "lsd"])
            writer.writerow(
                [
                    row["file"],
                    row["task"],
                    row["severity"],
                    row["method"],
                    f"{row['si_sdr']:.6f}",
                    f"{row['sdr']:.6f}",
                    f"{row['lsd']:.6f}",
                ]
            )
    return EXIT_OK


def cmd_train_denoiser(args) -> int:
    items = load_dataset(args.dataset, args.seed)
    schedule = build_schedule(args.steps)
    denoiser = train_shrinkage([sig for _, sig in items], schedule, n_sigma_bins=args.sigma_bins)
    save_shrinkage(denoiser, args.outfile)
    print(
        f"trained on {len(items)} items: {denoiser.gains.shape[0]} bands x "
        f"{denoiser.gains.shape[1]} noise levels -> {args.outfile}"
    )
    return EXIT_OK


def cmd_run_matrix(args) -> int:
    tasks = []
    for cell in args.tasks.split(","):
        task, _, severity = cell.strip().partition(":")
        if not severity:
            raise DiffRestoreError(f"task cell {cell!r} must look like task:severity")
        tasks.append((task, float(severity)))
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    spec = ExperimentSpec(
        tasks=tuple(tasks),
        methods=methods,
        dataset=args.dataset,
        seed=args.seed,
        sigma_y=args.sigma_y,
    )

    items = load_dataset(spec.dataset, spec.seed)
    length, rate = len(items[0][1]), items[0][1].sample_rate
    training = None
    if args.denoiser == "train":
        training = [sig for _, sig in load_dataset(args.train_dataset, args.train_seed)]
    denoiser = resolve_denoiser(args.denoiser, length, rate, training)

    result = run_matrix(spec, denoiser)

    from .report import (
        format_summary_table,
        render_summary_figure,
        write_results_csv,
        write_summary_csv,
    )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results_csv(result.rows, out_dir / "results.csv")
    write_summary_csv(result.summary, out_dir / "summary.csv")
    print(format_summary_table(result.summary))
    if not args.no_figures:
        for task in sorted({t for t, _ in spec.tasks}):
            render_summary_figure(result.summary, task, out_dir / f"summary_{task}.png")
    for failure in result.failures:
        _err(f"item failed: {failure}")
    if result.failed_cells:
        _err(f"cells with no successful items: {result.failed_cells}")
        return EXIT_RUNTIME
    print(f"wrote {out_dir}/results.csv and {out_dir}/summary.csv")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    results = acceptance.run_all(full=args.full)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "oracle_check.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["criterion", "passed", "elapsed_s", "detail"])
            for r in results:
                writer.writerow([r.name, int(r.passed), f"{r.elapsed_s:.3f}", r.detail])
        from .report import render_criteria_figure

        render_criteria_figure(results, out_dir / "oracle_check.png")
        print(f"wrote {out_dir}/oracle_check.csv")
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    handlers = {
        "degrade": cmd_degrade,
        "restore": cmd_restore,
        "evaluate": cmd_evaluate,
        "train-denoiser": cmd_train_denoiser,
        "run-matrix": cmd_run_matrix,
        "oracle-check": cmd_oracle_check,
    }
    try:
        return handlers[args.command](args)
    except FileNotFoundError as exc:
        _err(f"file not found: {exc.filename or exc}")
        return EXIT_RUNTIME
    except (DiffRestoreError, ValueError) as exc:
        _err(str(exc))
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
