"""Acceptance criteria for the oracle-check command and the test suite.

Each check returns a `CriterionResult` with the measured values in its
detail string; `run_all` executes them in order and reports one
pass/fail line each. The heavyweight end-to-end improvement check only
runs when `full=True`.
"""

from __future__ import annotations

import math
import sys
import tempfile
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .audio import Signal
from .config import load_preset
from .denoisers import GaussianPriorDenoiser, train_shrinkage
from .guidance import rg_gradient
from .harness import ExperimentSpec, run_matrix
from .operators import BrickwallLPF, HardClip, Measurement, clip_for_sdr
from .sampler import RepaintConfig, SamplerConfig, restore, rp_window
from .guidance import GuidanceConfig, rg_scale
from .schedule import build_schedule, churn_gamma
from .synth import SyntheticVoiceSpec, synth_corpus

__all__ = ["CriterionResult", "run_all", "CHECKS"]

SAMPLE_RATE = 22050


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str
    elapsed_s: float


def _result(name: str, start: float, passed: bool, detail: str) -> CriterionResult:
    return CriterionResult(name, passed, detail, time.monotonic() - start)


def _oracle_prior(length: int = 256) -> GaussianPriorDenoiser:
    """Pink Gaussian prior with a mostly-passband mean, used by the oracles."""
    n = np.arange(length)
    mean = (
        0.25 * np.cos(2 * np.pi * 3 * n / length + 0.7)
        + 0.12 * np.cos(2 * np.pi * 9 * n / length + 2.1)
        + 0.035 * np.cos(2 * np.pi * 48 * n / length + 1.3)
    )
    k = np.arange(length // 2 + 1, dtype=np.float64)
    lam = 0.02 / np.maximum(k, 1.0)
    return GaussianPriorDenoiser(Signal(mean, SAMPLE_RATE), lam)


def check_gaussian_posterior_oracle() -> CriterionResult:
    """Linear-task oracle: mean of 50 guided restorations vs the analytic posterior mean."""
    start = time.monotonic()
    length = 256
    prior = _oracle_prior(length)
    fc = SAMPLE_RATE / 4 / 2  # quarter of Nyquist
    op = BrickwallLPF(fc)

    x_true = prior.sample(np.random.default_rng(321))
    y = op.apply(x_true)
    meas = Measurement(y=y, op=op, sigma_y=0.0)

    # Independent analytic posterior mean: noiseless low-pass observation
    # pins the passband bins to y, the rest stay at the prior mean.
    freqs = np.arange(length // 2 + 1) * (SAMPLE_RATE / length)
    passband = freqs <= fc
    target_bins = np.where(passband, np.fft.rfft(y.samples), np.fft.rfft(prior.mean.samples))
    target = np.fft.irfft(target_bins, n=length)

    run_cfg = load_preset("pigdm-dc")
    n_seeds = 50
    acc = np.zeros(length)
    worst_passband = 0.0
    y_pass = np.fft.rfft(y.samples)[passband]
    y_pass_norm = np.linalg.norm(y_pass)
    for seed in range(n_seeds):
        out, _ = restore(meas, prior, replace(run_cfg.sampler, seed=seed), run_cfg.schedule)
        acc += out.samples
        out_pass = np.fft.rfft(out.samples)[passband]
        worst_passband = max(
            worst_passband, float(np.linalg.norm(out_pass - y_pass) / y_pass_norm)
        )
    mean_est = acc / n_seeds

    rel_err = float(np.linalg.norm(mean_est - target) / np.linalg.norm(target))
    elapsed = time.monotonic() - start
    passed = rel_err <= 0.05 and worst_passband <= 1e-6 and elapsed < 120.0
    return _result(
        "gaussian-posterior-oracle",
        start,
        passed,
        f"posterior-mean rel err {rel_err:.4f} (tol 0.05), "
        f"worst passband rel err {worst_passband:.2e} (tol 1e-6), "
        f"{elapsed:.1f}s (budget 120s)",
    )


def _fd_loss_gradient(denoiser, meas, x: Signal, sigma: float, h: float) -> np.ndarray:
    """Central-difference gradient of ||y - A(denoise(x, sigma))||^2."""

    def loss(samples: np.ndarray) -> float:
        x0 = denoiser.denoise(x.with_samples(samples), sigma)
        r = meas.y.samples - meas.op.apply(x0).samples
        return float(r @ r)

    base = x.samples
    grad = np.empty(len(x))
    for j in range(len(x)):
        bumped = base.copy()
        bumped[j] = base[j] + h
        up = loss(bumped)
        bumped[j] = base[j] - h
        down = loss(bumped)
        grad[j] = (up - down) / (2.0 * h)
    return grad


def check_guidance_gradients() -> CriterionResult:
    """rg_gradient vs finite differences for both denoisers x both operators."""
    start = time.monotonic()
    length = 128
    rng = np.random.default_rng(99)

    prior = _oracle_prior(length)
    corpus = synth_corpus(SyntheticVoiceSpec(n_items=6, duration_s=0.5), seed=7)
    shrinkage = train_shrinkage(corpus, build_schedule(300))

    clip_op = HardClip(0.4)
    lpf_op = BrickwallLPF(3000.0)
    h = 1e-6
    worst = 0.0
    n_probes = 20
    checked = 0
    for denoiser in (prior, shrinkage):
        for op in (clip_op, lpf_op):
            x_clean = Signal(0.3 * rng.standard_normal(length), SAMPLE_RATE)
            meas = Measurement(y=op.apply(x_clean), op=op, sigma_y=0.0)
            done = 0
            while done < n_probes:
                sigma = float(np.exp(rng.uniform(np.log(0.05), np.log(1.0))))
                x_t = Signal(
                    x_clean.samples + sigma * rng.standard_normal(length), SAMPLE_RATE
                )
                if isinstance(op, HardClip):
                    # FD probes must stay away from the clamp kink.
                    x0 = denoiser.denoise(x_t, sigma)
                    if np.min(np.abs(np.abs(x0.samples) - op.c)) < 50 * h:
                        continue
                grad = rg_gradient(denoiser, meas, x_t, sigma)
                fd = _fd_loss_gradient(denoiser, meas, x_t, sigma, h)
                rel = float(np.linalg.norm(grad.samples - fd) / np.linalg.norm(fd))
                worst = max(worst, rel)
                done += 1
                checked += 1
    elapsed = time.monotonic() - start
    passed = worst < 1e-4 and elapsed < 60.0 and checked == 4 * n_probes
    return _result(
        "guidance-gradient-checks",
        start,
        passed,
        f"worst rel err {worst:.2e} over {checked} probes (tol 1e-4), "
        f"{elapsed:.1f}s (budget 60s)",
    )


def check_operator_contracts() -> CriterionResult:
    """h(h+(h(x))) = h(x), LPF idempotence/adjoint identity, clip-clamp equality."""
    start = time.monotonic()
    rng = np.random.default_rng(17)
    length = 256
    clip_op = HardClip(0.5)
    lpf_op = BrickwallLPF(4000.0)

    worst_hhh = 0.0
    worst_idem = 0.0
    worst_adjoint = 0.0
    clamp_exact = True
    for _ in range(100):
        x = Signal(rng.standard_normal(length), SAMPLE_RATE)
        for op in (clip_op, lpf_op):
            hx = op.apply(x)
            hhh = op.apply(op.pseudo_inverse(hx))
            denom = max(float(np.linalg.norm(hx.samples)), 1e-30)
            worst_hhh = max(worst_hhh, float(np.linalg.norm(hhh.samples - hx.samples)) / denom)

        once = lpf_op.apply(x)
        twice = lpf_op.apply(once)
        worst_idem = max(
            worst_idem,
            float(np.linalg.norm(twice.samples - once.samples))
            / max(float(np.linalg.norm(once.samples)), 1e-30),
        )

        u = Signal(rng.standard_normal(length), SAMPLE_RATE)
        lhs = float(lpf_op.apply(x).samples @ u.samples)
        rhs = float(x.samples @ lpf_op.adjoint_at(x, u).samples)
        worst_adjoint = max(worst_adjoint, abs(lhs - rhs) / max(abs(lhs), 1e-30))

        clamp = np.minimum(np.maximum(x.samples, -clip_op.c), clip_op.c)
        if not np.array_equal(clip_op.apply(x).samples, clamp):
            clamp_exact = False

    passed = worst_hhh < 1e-9 and worst_idem < 1e-9 and worst_adjoint < 1e-9 and clamp_exact
    return _result(
        "operator-contracts",
        start,
        passed,
        f"h·h+·h rel err {worst_hhh:.2e}, idempotence {worst_idem:.2e}, "
        f"adjoint identity {worst_adjoint:.2e} (tol 1e-9 each), "
        f"clip==clamp exact: {clamp_exact}",
    )


def check_schedule_window_arithmetic() -> CriterionResult:
    """Ladder endpoints, RePaint window bounds and ramp endpoints."""
    start = time.monotonic()
    sched = build_schedule(300, nu=13.0, sigma_min=1e-4, sigma_max=1.0, s_churn=5.0)
    end_err = max(abs(float(sched.sigmas[0]) - 1.0), abs(float(sched.sigmas[-1]) - 1e-4))

    rp = RepaintConfig(enabled=True, u=10, phi1=1.5, phi2=2.8)
    window_ok = all(
        rp_window(rp, 300, i) == (10 if 150 <= i <= 280 else 0) for i in range(300)
    )

    cfg = GuidanceConfig(kind="rg", rho_prime=1.0, delta_rho_enabled=True, delta_rho_divisor=75.0)
    unit = Signal(np.ones(16), SAMPLE_RATE)
    # With ||G|| = sqrt(L) and power 2, the unramped scale at tau=1 is
    # rho' / sqrt(L); dividing it out leaves the bare ramp value.
    base = rg_scale(replace(cfg, delta_rho_enabled=False), sched, 299, 16, unit, sigma=1.0)
    ramp_start = rg_scale(cfg, sched, 0, 16, unit, sigma=1.0) / base
    ramp_end = rg_scale(cfg, sched, 299, 16, unit, sigma=1.0) / base
    ramp_ok = ramp_start == 0.0 and abs(ramp_end - 4.0) < 1e-12

    gamma = churn_gamma(sched, 150)
    gamma_ok = abs(gamma - 5.0 / 300.0) < 1e-15

    passed = end_err <= 1e-12 and window_ok and ramp_ok and gamma_ok
    return _result(
        "schedule-window-arithmetic",
        start,
        passed,
        f"endpoint err {end_err:.2e} (tol 1e-12), window [150,280]: {window_ok}, "
        f"ramp endpoints ({ramp_start:g}, {ramp_end:g}) vs (0, 4), gamma 1/60: {gamma_ok}",
    )


def check_clipping_calibration() -> CriterionResult:
    """clip_for_sdr hits 5 dB and 10 dB within 0.01 dB on 20 synthetic items."""
    start = time.monotonic()
    from .metrics import sdr

    corpus = synth_corpus(SyntheticVoiceSpec(n_items=20, duration_s=0.5), seed=11)
    worst = 0.0
    for target in (5.0, 10.0):
        for item in corpus:
            _, clipped = clip_for_sdr(item, target)
            worst = max(worst, abs(sdr(item, clipped) - target))
    passed = worst <= 0.01
    return _result(
        "clipping-calibration",
        start,
        passed,
        f"worst |SDR - target| {worst:.4f} dB over 40 calibrations (tol 0.01)",
    )


def check_unconditional_sanity() -> CriterionResult:
    """500 unguided samples reproduce the prior's per-band variances within 10%."""
    start = time.monotonic()
    length = 256
    k = np.arange(length // 2 + 1, dtype=np.float64)
    lam = 0.02 / np.maximum(k, 1.0)
    prior = GaussianPriorDenoiser(Signal(np.zeros(length), SAMPLE_RATE), lam)

    sched = build_schedule(300, s_churn=0.0)
    cfg = SamplerConfig(guidance=GuidanceConfig(kind="none"), dc_enabled=False)
    dummy_op = HardClip(10.0)
    meas = Measurement(y=Signal(np.zeros(length) + 1e-12, SAMPLE_RATE), op=dummy_op)

    n_samples = 500
    power = np.zeros(length // 2 + 1)
    for seed in range(n_samples):
        out, _ = restore(meas, prior, replace(cfg, seed=seed), sched)
        power += np.abs(np.fft.rfft(out.samples)) ** 2
    power /= n_samples * length  # per-bin variance in the prior's convention

    n_bands = 16
    edges = np.linspace(0, length // 2 + 1, n_bands + 1).astype(int)
    worst = 0.0
    for b in range(n_bands):
        sl = slice(edges[b], edges[b + 1])
        measured = float(power[sl].mean())
        expected = float(lam[sl].mean())
        worst = max(worst, abs(measured / expected - 1.0))
    elapsed = time.monotonic() - start
    passed = worst <= 0.10
    return _result(
        "unconditional-sampling-sanity",
        start,
        passed,
        f"worst band variance deviation {worst * 100:.1f}% over {n_bands} bands "
        f"(tol 10%), {n_samples} samples, {elapsed:.1f}s",
    )


def check_end_to_end_improvement() -> CriterionResult:
    """Guided restoration beats the degraded input on the synthetic corpus."""
    start = time.monotonic()
    train_set = synth_corpus(SyntheticVoiceSpec(n_items=24), seed=1000)
    denoiser = train_shrinkage(train_set, build_schedule(300))

    declip_spec = ExperimentSpec(
        tasks=(("declip", 5.0), ("declip", 10.0)),
        methods=("rg-drho-dc-rp",),
        dataset="synthetic:20",
        seed=0,
    )
    bwe_spec = ExperimentSpec(
        tasks=(("bwe", 3000.0), ("bwe", 5000.0)),
        methods=("pigdm-dc",),
        dataset="synthetic:20",
        seed=0,
    )
    quiet = lambda msg: None
    declip = run_matrix(declip_spec, denoiser, log=quiet)
    bwe = run_matrix(bwe_spec, denoiser, log=quiet)

    details = []
    passed = True
    for res, task, method, metric, better in (
        (declip, "declip", "rg-drho-dc-rp", "si_sdr_db", "higher"),
        (bwe, "bwe", "pigdm-dc", "lsd", "lower"),
    ):
        severities = sorted({r.severity for r in res.rows if r.task == task}, key=float)
        for sev in severities:
            base_rows = {
                r.file: getattr(r, metric)
                for r in res.rows
                if r.task == task and r.severity == sev and r.method in ("clipped", "lpf")
            }
            method_rows = {
                r.file: getattr(r, metric)
                for r in res.rows
                if r.task == task and r.severity == sev and r.method == method
            }
            base_mean = float(np.mean(list(base_rows.values())))
            meth_vals = [v for v in method_rows.values() if not math.isnan(v)]
            meth_mean = float(np.mean(meth_vals)) if meth_vals else math.nan
            if better == "higher":
                mean_ok = meth_mean > base_mean
                wins = sum(
                    1
                    for f, v in method_rows.items()
                    if not math.isnan(v) and v > base_rows[f]
                )
            else:
                mean_ok = meth_mean < base_mean
                wins = sum(
                    1
                    for f, v in method_rows.items()
                    if not math.isnan(v) and v < base_rows[f]
                )
            rate = wins / len(base_rows)
            cell_ok = mean_ok and rate >= 0.8
            passed = passed and cell_ok
            details.append(
                f"{task}@{sev}: {method} {meth_mean:.2f} vs baseline {base_mean:.2f} "
                f"({metric}, want {better}), per-item {wins}/{len(base_rows)}"
            )
    elapsed = time.monotonic() - start
    passed = passed and elapsed < 900.0
    return _result(
        "end-to-end-improvement",
        start,
        passed,
        "; ".join(details) + f"; {elapsed:.0f}s (budget 900s)",
    )


def check_determinism() -> CriterionResult:
    """Same seed and config produce bit-identical restoration output."""
    start = time.monotonic()
    corpus = synth_corpus(SyntheticVoiceSpec(n_items=1, duration_s=0.25), seed=3)
    x = corpus[0]
    op, _ = clip_for_sdr(x, 5.0)
    meas = Measurement(y=op.apply(x), op=op)
    from .denoisers import pink_gaussian_prior

    denoiser = pink_gaussian_prior(len(x), x.sample_rate)
    cfg = SamplerConfig(
        guidance=GuidanceConfig(kind="rg", rho_prime=0.1, delta_rho_enabled=True),
        dc_enabled=True,
        rp=RepaintConfig(enabled=True, u=2, phi1=1.5, phi2=2.8),
        seed=42,
    )
    sched = build_schedule(40)
    out1, trace1 = restore(meas, denoiser, cfg, sched)
    out2, trace2 = restore(meas, denoiser, cfg, sched)
    identical = np.array_equal(out1.samples, out2.samples) and len(trace1.records) == len(
        trace2.records
    )
    return _result(
        "determinism",
        start,
        identical,
        f"repeat restoration bit-identical: {identical} "
        f"({len(trace1.records)} trace records)",
    )


CHECKS = [
    ("schedule-window-arithmetic", check_schedule_window_arithmetic, True),
    ("operator-contracts", check_operator_contracts, True),
    ("clipping-calibration", check_clipping_calibration, True),
    ("guidance-gradient-checks", check_guidance_gradients, True),
    ("determinism", check_determinism, True),
    ("gaussian-posterior-oracle", check_gaussian_posterior_oracle, True),
    ("unconditional-sampling-sanity", check_unconditional_sanity, True),
    ("end-to-end-improvement", check_end_to_end_improvement, False),
]


def run_all(full: bool = False, log=lambda msg: print(msg)) -> list[CriterionResult]:
    """Run the acceptance checks, printing one pass/fail line per criterion."""
    results = []
    for name, func, fast in CHECKS:
        if not fast and not full:
            log(f"[SKIP] {name} (use --full)")
            continue
        res = func()
        status = "PASS" if res.passed else "FAIL"
        log(f"[{status}] {res.name}: {res.detail}")
        results.append(res)
    return results
