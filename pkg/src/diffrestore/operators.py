"""Degradation operators, pseudo-inverses and data-consistency projections.

Two tasks are covered:

* hard clipping (declipping task) — elementwise clamp to [-c, c];
* brick-wall low-pass (bandwidth-extension task) — ideal Fourier mask.

Both define their pseudo-inverse as the forward operator itself, which
satisfies the h(h+(h(x))) = h(x) contract exactly: the clamp and the
mask are idempotent.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .audio import Signal
from .errors import InfeasibleTargetError
from .metrics import SDR_CAP_DB, sdr

__all__ = [
    "DegradationOp",
    "HardClip",
    "BrickwallLPF",
    "Measurement",
    "clip_for_sdr",
    "degrade",
]


class DegradationOp(abc.ABC):
    """Forward operator plus the hooks guidance and DC need."""

    @abc.abstractmethod
    def apply(self, x: Signal) -> Signal:
        """Forward degradation A(x)."""

    def pseudo_inverse(self, y: Signal) -> Signal:
        """h+: here identical to the forward operator for both tasks."""
        return self.apply(y)

    @abc.abstractmethod
    def adjoint_at(self, x: Signal, v: Signal) -> Signal:
        """v^T (dA/dx) evaluated at x (subgradient where A is non-smooth)."""

    @abc.abstractmethod
    def dc_project(self, x_hat: Signal, y: Signal) -> Signal:
        """Overwrite the parts of x_hat the measurement y pins down."""


@dataclass(frozen=True)
class HardClip(DegradationOp):
    """Elementwise clamp to [-c, c], written as (|x + c| - |x - c|) / 2."""

    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"clip threshold must be positive, got {self.c}")

    def apply(self, x: Signal) -> Signal:
        # min(max(x, -c), c); identical to (|x + c| - |x - c|) / 2 but
        # avoids the 1-ulp roundoff of the abs form.
        return x.with_samples(np.clip(x.samples, -self.c, self.c))

    def adjoint_at(self, x: Signal, v: Signal) -> Signal:
        # Slope 1 strictly inside the linear region, 0 on the saturated
        # branch; the boundary |x| = c counts as clipped.
        mask = np.abs(x.samples) < self.c
        return v.with_samples(v.samples * mask)

    def dc_project(self, x_hat: Signal, y: Signal) -> Signal:
        reliable = np.abs(y.samples) < self.c
        return x_hat.with_samples(np.where(reliable, y.samples, x_hat.samples))


class BrickwallLPF(DegradationOp):
    """Ideal low-pass: Fourier bins with center frequency <= fc pass, the rest are zeroed.

    Linear, self-adjoint and idempotent, so it is its own pseudo-inverse
    and its own adjoint.
    """

    def __init__(self, fc: float):
        if not fc > 0:
            raise ValueError(f"cutoff must be positive, got {fc}")
        self.fc = float(fc)
        self._mask_cache: dict[tuple[int, int], np.ndarray] = {}

    def __repr__(self):
        return f"BrickwallLPF(fc={self.fc})"

    def _mask(self, x: Signal) -> np.ndarray:
        if not self.fc < x.sample_rate / 2:
            raise ValueError(
                f"cutoff {self.fc} Hz must lie below Nyquist {x.sample_rate / 2} Hz"
            )
        key = (len(x), x.sample_rate)
        mask = self._mask_cache.get(key)
        if mask is None:
            freqs = np.arange(len(x) // 2 + 1) * (x.sample_rate / len(x))
            mask = freqs <= self.fc
            self._mask_cache[key] = mask
        return mask

    def _filter(self, x: Signal) -> Signal:
        bins = np.fft.rfft(x.samples)
        bins[~self._mask(x)] = 0.0
        return x.with_samples(np.fft.irfft(bins, n=len(x)))

    def apply(self, x: Signal) -> Signal:
        return self._filter(x)

    def adjoint_at(self, x: Signal, v: Signal) -> Signal:
        return self._filter(v)

    def dc_project(self, x_hat: Signal, y: Signal) -> Signal:
        # Measurement supplies everything below fc, the prediction
        # everything above: y + (x_hat - LPF(x_hat)).
        high = x_hat.samples - self._filter(x_hat).samples
        return x_hat.with_samples(y.samples + high)


@dataclass(frozen=True)
class Measurement:
    """Observed degraded signal together with its operator and noise level."""

    y: Signal
    op: DegradationOp
    sigma_y: float = 0.0

    def __post_init__(self):
        if self.sigma_y < 0:
            raise ValueError(f"measurement noise must be non-negative, got {self.sigma_y}")


def clip_for_sdr(
    x: Signal, target_sdr_db: float, tol_db: float = 0.005, max_steps: int = 200
) -> tuple[HardClip, Signal]:
    """Find the clip threshold whose distortion hits a target SDR.

    SDR(x, clip(x, c)) increases monotonically with c, so plain bisection
    over (0, max|x|] converges; the returned pair is the calibrated
    operator and the clipped signal, within tol_db of the target.
    """
    peak = float(np.abs(x.samples).max())
    if peak == 0.0 or float(x.samples @ x.samples) == 0.0:
        raise InfeasibleTargetError("cannot calibrate clipping on a silent signal")
    if target_sdr_db >= SDR_CAP_DB:
        raise InfeasibleTargetError(
            f"target {target_sdr_db} dB is at or above the {SDR_CAP_DB} dB cap"
        )

    def sdr_at(c: float) -> float:
        return sdr(x, HardClip(c).apply(x))

    lo, hi = peak * 1e-9, peak
    if sdr_at(hi) < target_sdr_db:
        raise InfeasibleTargetError(
            f"target {target_sdr_db} dB above the SDR reachable without clipping"
        )
    if sdr_at(lo) > target_sdr_db:
        raise InfeasibleTargetError(
            f"target {target_sdr_db} dB below the SDR at threshold ~0"
        )
    c = hi
    for _ in range(max_steps):
        c = 0.5 * (lo + hi)
        value = sdr_at(c)
        if abs(value - target_sdr_db) <= tol_db:
            op = HardClip(c)
            return op, op.apply(x)
        if value < target_sdr_db:
            lo = c
        else:
            hi = c
    raise InfeasibleTargetError(
        f"clip calibration did not reach {target_sdr_db} dB within {max_steps} bisection steps"
    )


def degrade(op: DegradationOp, x: Signal, sigma_y: float = 0.0, seed: int = 0) -> Measurement:
    """Apply the forward operator and add seeded white measurement noise."""
    if sigma_y < 0:
        raise ValueError(f"measurement noise must be non-negative, got {sigma_y}")
    y = op.apply(x)
    if sigma_y > 0:
        rng = np.random.default_rng(seed)
        y = y.with_samples(y.samples + sigma_y * rng.standard_normal(len(y)))
    return Measurement(y=y, op=op, sigma_y=sigma_y)
