"""Discrete noise-level ladder for the reverse diffusion process.

The ladder interpolates between sigma_max and sigma_min in 1/nu-power
space, indexed by an ascending iteration counter i = 0..T-1 that runs
from the noisiest level to the cleanest. Churn parameters describe the
per-step temporary noise inflation used by the stochastic sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["NoiseSchedule", "Progress", "build_schedule", "churn_gamma", "progress"]

CHURN_GAMMA_CAP = math.sqrt(2.0) - 1.0


@dataclass(frozen=True)
class NoiseSchedule:
    """Strictly decreasing sigma ladder plus churn configuration."""

    sigmas: np.ndarray
    nu: float
    sigma_min: float
    sigma_max: float
    s_churn: float
    s_noise: float = 1.0
    s_tmin: float = 0.0
    s_tmax: float = math.inf

    def __post_init__(self):
        arr = np.asarray(self.sigmas, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("schedule needs at least two noise levels")
        if not np.isfinite(arr).all() or (arr <= 0).any():
            raise ValueError("noise levels must be finite and positive")
        if not (np.diff(arr) < 0).all():
            raise ValueError("noise levels must be strictly decreasing")
        arr.flags.writeable = False
        object.__setattr__(self, "sigmas", arr)

    @property
    def steps(self) -> int:
        return self.sigmas.shape[0]

    def __len__(self) -> int:
        return self.steps


@dataclass(frozen=True)
class Progress:
    """Normalized position along the ladder: 0 at the noisiest step, 1 at the last."""

    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"progress must lie in [0, 1], got {self.value}")


def build_schedule(
    steps: int,
    nu: float = 13.0,
    sigma_min: float = 1e-4,
    sigma_max: float = 1.0,
    s_churn: float = 5.0,
    s_noise: float = 1.0,
    s_tmin: float = 0.0,
    s_tmax: float = math.inf,
) -> NoiseSchedule:
    """Power-interpolated ladder sigma_i = (smax^(1/nu) + (i/(T-1))(smin^(1/nu) - smax^(1/nu)))^nu."""
    if steps < 2:
        raise ValueError(f"need at least 2 steps, got {steps}")
    if not (math.isfinite(sigma_min) and math.isfinite(sigma_max)):
        raise ValueError("sigma bounds must be finite")
    if not 0 < sigma_min < sigma_max:
        raise ValueError(f"need 0 < sigma_min < sigma_max, got {sigma_min}, {sigma_max}")
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    ramp = np.arange(steps, dtype=np.float64) / (steps - 1)
    inv_nu = 1.0 / nu
    sigmas = (sigma_max**inv_nu + ramp * (sigma_min**inv_nu - sigma_max**inv_nu)) ** nu
    return NoiseSchedule(
        sigmas,
        nu=float(nu),
        sigma_min=float(sigma_min),
        sigma_max=float(sigma_max),
        s_churn=float(s_churn),
        s_noise=float(s_noise),
        s_tmin=float(s_tmin),
        s_tmax=float(s_tmax),
    )


def churn_gamma(schedule: NoiseSchedule, i: int) -> float:
    """Per-step churn factor: min(S_churn/T, sqrt(2)-1) inside the activity band, else 0.

    The inflated level is (1 + gamma) * sigma_i.
    """
    sigma = float(schedule.sigmas[i])  # raises IndexError on bad i
    if schedule.s_churn <= 0:
        return 0.0
    if not schedule.s_tmin <= sigma <= schedule.s_tmax:
        return 0.0
    return min(schedule.s_churn / schedule.steps, CHURN_GAMMA_CAP)


def progress(schedule: NoiseSchedule, i: int) -> Progress:
    """Map iteration index i to its position i/(T-1) along the ladder."""
    if not 0 <= i < schedule.steps:
        raise IndexError(f"index {i} outside schedule of {schedule.steps} steps")
    return Progress(i / (schedule.steps - 1))
