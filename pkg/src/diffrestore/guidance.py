"""Likelihood-gradient terms that steer the reverse diffusion.

Two mechanisms are provided, selected by `GuidanceConfig.kind`:

* reconstruction guidance (`rg`) — gradient of the squared measurement
  residual through the denoiser, scaled by a time-dependent factor that
  optionally ramps up toward the clean end of the schedule;
* pseudo-inverse guidance (`pigdm`) — the pseudo-inverse residual pushed
  through the denoiser Jacobian, divided by sigma^2 so it adds to the
  score on the same scale.

`conditional_score` composes the plain score with the configured term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .audio import Signal
from .denoisers import Denoiser
from .errors import GuidanceBlowupError, NonFiniteSignalError
from .operators import Measurement
from .schedule import NoiseSchedule

__all__ = [
    "GuidanceConfig",
    "GuidanceResult",
    "rg_gradient",
    "rg_scale",
    "pigdm_direction",
    "evaluate_guidance",
    "conditional_score",
]

GUIDANCE_KINDS = ("none", "rg", "pigdm")
TIME_CONVENTIONS = ("noise-level", "countdown-index")


@dataclass(frozen=True)
class GuidanceConfig:
    """Which guidance term to apply and how to scale it."""

    kind: str = "none"
    rho_prime: float = 0.25
    delta_rho_enabled: bool = False
    delta_rho_divisor: float = 75.0
    rho_time_convention: str = "noise-level"
    grad_norm_power: int = 2

    def __post_init__(self):
        if self.kind not in GUIDANCE_KINDS:
            raise ValueError(f"guidance kind must be one of {GUIDANCE_KINDS}, got {self.kind!r}")
        if not self.rho_prime > 0:
            raise ValueError(f"rho_prime must be positive, got {self.rho_prime}")
        if not self.delta_rho_divisor > 0:
            raise ValueError(f"delta_rho_divisor must be positive, got {self.delta_rho_divisor}")
        if self.rho_time_convention not in TIME_CONVENTIONS:
            raise ValueError(
                f"rho_time_convention must be one of {TIME_CONVENTIONS}, "
                f"got {self.rho_time_convention!r}"
            )
        if self.grad_norm_power not in (1, 2):
            raise ValueError(f"grad_norm_power must be 1 or 2, got {self.grad_norm_power}")


@dataclass(frozen=True)
class GuidanceResult:
    """Additive conditional-score term plus the measurement residual norm."""

    direction: Signal
    residual_norm: float


def _denoise_or_given(denoiser, x_t, sigma, x0_hat):
    return denoiser.denoise(x_t, sigma) if x0_hat is None else x0_hat


def rg_gradient(
    denoiser: Denoiser,
    meas: Measurement,
    x_t: Signal,
    sigma: float,
    x0_hat: Signal | None = None,
) -> Signal:
    """Unscaled gradient of ||y - A(denoise(x_t, sigma))||^2 w.r.t. x_t.

    Chain: residual doubled, pulled back through the operator subgradient
    at the prediction, then through the denoiser VJP. Pass `x0_hat` to
    reuse (or substitute) a precomputed prediction; the Jacobian chain is
    still evaluated with the denoiser's own VJP at x_t.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    try:
        x0 = _denoise_or_given(denoiser, x_t, sigma, x0_hat)
        r = meas.op.apply(x0).samples - meas.y.samples
        pulled = meas.op.adjoint_at(x0, x0.with_samples(2.0 * r))
        grad = denoiser.vjp(x_t, sigma, pulled)
    except NonFiniteSignalError as exc:
        raise GuidanceBlowupError(f"reconstruction guidance blew up: {exc}") from exc
    return grad


def rg_scale(
    cfg: GuidanceConfig,
    schedule: NoiseSchedule,
    i: int,
    length: int,
    grad: Signal,
    sigma: float | None = None,
) -> float:
    """Time-dependent scale for the reconstruction-guidance gradient.

    Base scale: rho_prime * sqrt(L) / (tau * ||G||^p) with tau either the
    noise level (floored at sigma_min) or the countdown index T - i.
    When the ramp is enabled the scale is additionally multiplied by a
    factor growing linearly from 0 at i = 0 to T/divisor at i = T - 1, so
    guidance stays weak while the trajectory is still mostly noise.
    """
    norm = float(np.linalg.norm(grad.samples))
    if norm == 0.0:
        return 0.0
    steps = schedule.steps
    if cfg.rho_time_convention == "noise-level":
        tau = max(float(schedule.sigmas[i]) if sigma is None else float(sigma), schedule.sigma_min)
    else:
        tau = float(steps - i)
    scale = cfg.rho_prime * math.sqrt(length) / (tau * norm**cfg.grad_norm_power)
    if cfg.delta_rho_enabled:
        scale *= (steps / cfg.delta_rho_divisor) * (i / (steps - 1))
    return scale


def pigdm_direction(
    denoiser: Denoiser,
    meas: Measurement,
    x_t: Signal,
    sigma: float,
    x0_hat: Signal | None = None,
) -> Signal:
    """Pseudo-inverse residual h+(y) - h+(h(x0_hat)) through the denoiser VJP."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    try:
        x0 = _denoise_or_given(denoiser, x_t, sigma, x0_hat)
        op = meas.op
        d = op.pseudo_inverse(meas.y).samples - op.pseudo_inverse(op.apply(x0)).samples
        direction = denoiser.vjp(x_t, sigma, x0.with_samples(d))
    except NonFiniteSignalError as exc:
        raise GuidanceBlowupError(f"pseudo-inverse guidance blew up: {exc}") from exc
    return direction


def evaluate_guidance(
    denoiser: Denoiser,
    meas: Measurement,
    cfg: GuidanceConfig,
    schedule: NoiseSchedule,
    i: int,
    x_t: Signal,
    sigma: float | None = None,
    x0_hat: Signal | None = None,
) -> GuidanceResult:
    """Additive conditional-score term for one step, plus the residual diagnostic."""
    sigma = float(schedule.sigmas[i]) if sigma is None else float(sigma)
    x0 = _denoise_or_given(denoiser, x_t, sigma, x0_hat)
    residual = float(np.linalg.norm(meas.y.samples - meas.op.apply(x0).samples))

    if cfg.kind == "none":
        direction = x_t.with_samples(np.zeros(len(x_t)))
    elif cfg.kind == "rg":
        grad = rg_gradient(denoiser, meas, x_t, sigma, x0_hat=x0)
        scale = rg_scale(cfg, schedule, i, len(x_t), grad, sigma=sigma)
        direction = grad.with_samples(-scale * grad.samples)
    else:  # pigdm
        raw = pigdm_direction(denoiser, meas, x_t, sigma, x0_hat=x0)
        direction = raw.with_samples(raw.samples / (sigma * sigma))
    return GuidanceResult(direction=direction, residual_norm=residual)


def conditional_score(
    denoiser: Denoiser,
    meas: Measurement,
    cfg: GuidanceConfig,
    schedule: NoiseSchedule,
    i: int,
    x_t: Signal,
    sigma: float | None = None,
    x0_hat: Signal | None = None,
) -> Signal:
    """Score plus the configured guidance term at noise level sigma_i.

    `x0_hat` overrides the denoiser prediction in both the score and the
    guidance residual; the sampler uses this to feed a data-consistent
    prediction into the step direction.
    """
    sigma = float(schedule.sigmas[i]) if sigma is None else float(sigma)
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x0 = _denoise_or_given(denoiser, x_t, sigma, x0_hat)
    result = evaluate_guidance(denoiser, meas, cfg, schedule, i, x_t, sigma=sigma, x0_hat=x0)
    base = (x0.samples - x_t.samples) / (sigma * sigma)
    return x_t.with_samples(base + result.direction.samples)
