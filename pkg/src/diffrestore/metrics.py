"""Objective quality metrics: SI-SDR, SDR and log-spectral distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio import Signal, Spectrum, stft

__all__ = ["MetricReport", "si_sdr", "sdr", "lsd", "lsd_frames"]

SDR_CAP_DB = 100.0
LSD_EPS = 1e-10


@dataclass(frozen=True)
class MetricReport:
    """One evaluated (file, task, severity, method) cell."""

    file: str
    task: str
    severity: str
    method: str
    si_sdr_db: float
    sdr_db: float
    lsd: float


def _check_pair(reference: Signal, estimate: Signal):
    if len(reference) != len(estimate):
        raise ValueError(
            f"length mismatch: reference {len(reference)}, estimate {len(estimate)}"
        )


def si_sdr(reference: Signal, estimate: Signal) -> float:
    """Scale-invariant SDR in dB, capped at +100 when the error underflows.

    The estimate is first projected onto the reference (optimal scalar
    gain), so any global rescaling of the estimate leaves the value
    unchanged.
    """
    _check_pair(reference, estimate)
    ref = reference.samples
    est = estimate.samples
    ref_energy = float(ref @ ref)
    if ref_energy == 0.0:
        raise ValueError("reference signal is silent")
    alpha = float(est @ ref) / ref_energy
    target = alpha * ref
    err = target - est
    target_energy = float(target @ target)
    err_energy = float(err @ err)
    if err_energy <= target_energy * 1e-10:
        return SDR_CAP_DB
    return min(10.0 * math.log10(target_energy / err_energy), SDR_CAP_DB)


def sdr(reference: Signal, estimate: Signal) -> float:
    """Plain SDR in dB (no gain fitting), capped at +100."""
    _check_pair(reference, estimate)
    ref = reference.samples
    err = ref - estimate.samples
    ref_energy = float(ref @ ref)
    if ref_energy == 0.0:
        raise ValueError("reference signal is silent")
    err_energy = float(err @ err)
    if err_energy <= ref_energy * 1e-10:
        return SDR_CAP_DB
    return min(10.0 * math.log10(ref_energy / err_energy), SDR_CAP_DB)


def lsd_frames(ref_frames: list[Spectrum], est_frames: list[Spectrum]) -> float:
    """Log-spectral distance from precomputed STFT frames.

    Per frame: RMS over bins of 10*log10((|S_ref|^2 + eps)/(|S_est|^2 + eps));
    the result is the mean over frames. Symmetric under swapping the
    arguments and zero when they match.
    """
    if len(ref_frames) != len(est_frames):
        raise ValueError("frame count mismatch")
    per_frame = []
    for ref, est in zip(ref_frames, est_frames):
        p_ref = np.abs(ref.bins) ** 2 + LSD_EPS
        p_est = np.abs(est.bins) ** 2 + LSD_EPS
        log_ratio = 10.0 * np.log10(p_ref / p_est)
        per_frame.append(math.sqrt(float(np.mean(log_ratio**2))))
    return float(np.mean(per_frame))


def lsd(reference: Signal, estimate: Signal, window: int = 1024, hop: int = 256) -> float:
    """Log-spectral distance between two signals (Hann STFT, power spectra)."""
    _check_pair(reference, estimate)
    return lsd_frames(stft(reference, window, hop), stft(estimate, window, hop))
