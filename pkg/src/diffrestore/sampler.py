"""Reverse-diffusion engine: churned Euler/Heun steps, DC and RePaint cycles.

One `restore` call walks the noise ladder from sigma_max down to
sigma_min. Each step optionally

* inflates the noise level (churn) and re-noises the state,
* substitutes the measurement into the clean-signal prediction (DC)
  before the step direction is formed,
* adds a guidance term to the score, and
* repeats itself `u` times inside the RePaint window, re-diffusing the
  output back to the current level between repeats.

All randomness comes from one generator seeded by the config, so a
fixed (seed, config, measurement, denoiser) tuple reproduces the output
bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .audio import Signal
from .denoisers import Denoiser
from .errors import GuidanceBlowupError, NonFiniteSignalError
from .guidance import GuidanceConfig, evaluate_guidance
from .operators import Measurement
from .schedule import NoiseSchedule, churn_gamma

__all__ = [
    "RepaintConfig",
    "SamplerConfig",
    "StepRecord",
    "Trace",
    "rp_window",
    "rp_rediffuse",
    "sample_step",
    "restore",
]

_WINDOW_EPS = 1e-9


@dataclass(frozen=True)
class RepaintConfig:
    """RePaint cycle count and the window (in thirds of the schedule) where it runs."""

    enabled: bool = False
    u: int = 0
    phi1: float = 0.0
    phi2: float = 0.0

    def __post_init__(self):
        if self.u < 0:
            raise ValueError(f"cycle count must be non-negative, got {self.u}")
        if not 0.0 <= self.phi1 <= self.phi2 <= 3.0:
            raise ValueError(
                f"need 0 <= phi1 <= phi2 <= 3, got phi1={self.phi1} phi2={self.phi2}"
            )


@dataclass(frozen=True)
class SamplerConfig:
    """Full sampling recipe: guidance, DC, RePaint, solver order and seed."""

    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    dc_enabled: bool = False
    rp: RepaintConfig = field(default_factory=RepaintConfig)
    order: int = 1
    seed: int = 0
    dc_order: str = "pre"

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError(f"solver order must be 1 or 2, got {self.order}")
        if self.dc_order not in ("pre", "post"):
            raise ValueError(f"dc_order must be 'pre' or 'post', got {self.dc_order!r}")


@dataclass(frozen=True)
class StepRecord:
    """One sampler iteration: schedule index, level, residual, RePaint cycle."""

    iter: int
    sigma: float
    residual: float
    rp_cycle: int


@dataclass
class Trace:
    """Per-iteration diagnostics plus the final clean-signal estimate."""

    records: list[StepRecord] = field(default_factory=list)
    final: Signal | None = None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "sigma", "residual", "rp_cycle"])
            for rec in self.records:
                writer.writerow(
                    [rec.iter, f"{rec.sigma:.12g}", f"{rec.residual:.12g}", rec.rp_cycle]
                )


def rp_window(rp: RepaintConfig, steps: int, i: int) -> int:
    """Extra RePaint cycles at iteration i: u inside [phi1*T/3, phi2*T/3], else 0."""
    if not rp.enabled or rp.u == 0:
        return 0
    lo = rp.phi1 * steps / 3.0 - _WINDOW_EPS
    hi = rp.phi2 * steps / 3.0 + _WINDOW_EPS
    return rp.u if lo <= i <= hi else 0


def rp_rediffuse(
    x_prev: Signal, sigma_hi: float, sigma_lo: float, rng: np.random.Generator
) -> Signal:
    """Diffuse a partially denoised state back up to a higher noise level."""
    if sigma_hi <= sigma_lo:
        raise ValueError(f"need sigma_hi > sigma_lo, got {sigma_hi} <= {sigma_lo}")
    if sigma_lo < 0:
        raise ValueError(f"sigma_lo must be non-negative, got {sigma_lo}")
    step_std = np.sqrt(sigma_hi * sigma_hi - sigma_lo * sigma_lo)
    return x_prev.with_samples(
        x_prev.samples + step_std * rng.standard_normal(len(x_prev))
    )


def _slope(
    x: Signal,
    sigma: float,
    i: int,
    denoiser: Denoiser,
    meas: Measurement,
    cfg: SamplerConfig,
    schedule: NoiseSchedule,
) -> tuple[np.ndarray, float]:
    """ODE slope -sigma * conditional_score with optional DC substitution."""
    x0 = denoiser.denoise(x, sigma)
    # Diagnostic residual uses the raw prediction; the DC-projected one is
    # consistent by construction and would always read ~0.
    raw_residual = float(np.linalg.norm(meas.y.samples - meas.op.apply(x0).samples))
    x0_dc = meas.op.dc_project(x0, meas.y) if cfg.dc_enabled else x0
    guidance_x0 = x0_dc if cfg.dc_order == "pre" else x0
    result = evaluate_guidance(
        denoiser, meas, cfg.guidance, schedule, i, x, sigma=sigma, x0_hat=guidance_x0
    )
    cond_score = (x0_dc.samples - x.samples) / (sigma * sigma) + result.direction.samples
    return -sigma * cond_score, raw_residual


def sample_step(
    x: Signal,
    i: int,
    denoiser: Denoiser,
    meas: Measurement,
    cfg: SamplerConfig,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
) -> tuple[Signal, float]:
    """One churned Euler (or Heun) step from sigma_i to sigma_{i+1}.

    Returns the advanced state and the measurement residual observed at
    this step. Non-finite values abort with the step index attached.
    """
    sigma_i = float(schedule.sigmas[i])
    sigma_next = float(schedule.sigmas[i + 1])
    try:
        gamma = churn_gamma(schedule, i)
        if gamma > 0.0:
            sigma_hat = (1.0 + gamma) * sigma_i
            bump = np.sqrt(sigma_hat**2 - sigma_i**2) * schedule.s_noise
            x_hat = x.with_samples(x.samples + bump * rng.standard_normal(len(x)))
        else:
            sigma_hat = sigma_i
            x_hat = x

        d, residual = _slope(x_hat, sigma_hat, i, denoiser, meas, cfg, schedule)
        x_next = x_hat.with_samples(x_hat.samples + (sigma_next - sigma_hat) * d)
        if cfg.order == 2 and sigma_next > 0.0:
            d2, _ = _slope(x_next, sigma_next, i + 1, denoiser, meas, cfg, schedule)
            x_next = x_hat.with_samples(
                x_hat.samples + (sigma_next - sigma_hat) * 0.5 * (d + d2)
            )
    except GuidanceBlowupError as exc:
        exc.step_index = i
        raise
    except NonFiniteSignalError as exc:
        raise GuidanceBlowupError(
            f"sampler state became non-finite at step {i}: {exc}", step_index=i
        ) from exc
    return x_next, residual


def restore(
    meas: Measurement,
    denoiser: Denoiser,
    cfg: SamplerConfig,
    schedule: NoiseSchedule,
) -> tuple[Signal, Trace]:
    """Run the full reverse diffusion against one measurement.

    The state starts as white noise at sigma_max; every ladder step runs
    once plus `rp_window(i)` RePaint repeats, and the terminal estimate
    is one last denoise at sigma_min (DC-projected when enabled). The
    trace gains one record per iteration plus one for the terminal
    estimate; on blow-up the partial trace is attached to the error.
    """
    rng = np.random.default_rng(cfg.seed)
    steps = schedule.steps
    y = meas.y
    x = y.with_samples(schedule.sigma_max * rng.standard_normal(len(y)))
    trace = Trace()

    try:
        for i in range(steps - 1):
            cycles = 1 + rp_window(cfg.rp, steps, i)
            sigma_i = float(schedule.sigmas[i])
            sigma_next = float(schedule.sigmas[i + 1])
            for cycle in range(cycles):
                x_next, residual = sample_step(x, i, denoiser, meas, cfg, schedule, rng)
                trace.records.append(StepRecord(i, sigma_i, residual, cycle))
                if cycle < cycles - 1:
                    x = rp_rediffuse(x_next, sigma_i, sigma_next, rng)
                else:
                    x = x_next

        final = denoiser.denoise(x, schedule.sigma_min)
        final_residual = float(np.linalg.norm(y.samples - meas.op.apply(final).samples))
        if cfg.dc_enabled:
            final = meas.op.dc_project(final, y)
        trace.records.append(
            StepRecord(steps - 1, schedule.sigma_min, final_residual, 0)
        )
    except GuidanceBlowupError as exc:
        exc.trace = trace
        if exc.residual_norm is None and trace.records:
            exc.residual_norm = trace.records[-1].residual
        raise

    trace.final = final
    return final, trace
