"""Denoiser abstraction and the two shipped reference denoisers.

A denoiser estimates the clean signal underlying a noisy input at a
known noise level, and exposes a vector-Jacobian product so guidance
terms can differentiate through it. Both shipped denoisers act as
per-frequency gains (diagonal in the Fourier basis), which keeps their
Jacobians exact:

* `GaussianPriorDenoiser` — closed-form posterior mean under a
  stationary Gaussian prior; used as a machine-precision oracle.
* `ShrinkageDenoiser` — per-(band, noise-level) Wiener gains fitted to
  a training corpus; the trainable reference model.
"""

from __future__ import annotations

import abc
import struct
from dataclasses import dataclass

import numpy as np

from .audio import Signal
from .schedule import NoiseSchedule

__all__ = [
    "Denoiser",
    "GaussianPriorDenoiser",
    "ShrinkageDenoiser",
    "score",
    "train_shrinkage",
    "denoising_loss",
    "save_shrinkage",
    "load_shrinkage",
    "flat_gaussian_prior",
    "pink_gaussian_prior",
]

SHRINKAGE_MAGIC = b"DPSD1"


class Denoiser(abc.ABC):
    """Interface: clean-signal estimate plus VJP against its Jacobian."""

    @abc.abstractmethod
    def denoise(self, x: Signal, sigma: float) -> Signal:
        """Estimate of the clean signal given x observed at noise level sigma."""

    def vjp(self, x: Signal, sigma: float, v: Signal) -> Signal:
        """v^T (d denoise / dx) at (x, sigma), returned as a signal.

        Default implementation: central finite differences with step
        h = 1e-4 * (1 + max|x|). Costs O(L) denoise evaluations per
        call; concrete denoisers override with exact forms, so this
        path is only exercised by tests.
        """
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        if len(v) != len(x):
            raise ValueError("probe length does not match input length")
        h = 1e-4 * (1.0 + np.abs(x.samples).max())
        base = x.samples
        out = np.empty(len(x))
        for j in range(len(x)):
            bumped = base.copy()
            bumped[j] = base[j] + h
            up = self.denoise(x.with_samples(bumped), sigma).samples
            bumped[j] = base[j] - h
            down = self.denoise(x.with_samples(bumped), sigma).samples
            out[j] = float(v.samples @ (up - down)) / (2.0 * h)
        return x.with_samples(out)


def score(denoiser: Denoiser, x: Signal, sigma: float) -> Signal:
    """Score estimate (denoise(x, sigma) - x) / sigma^2."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d = denoiser.denoise(x, sigma)
    return x.with_samples((d.samples - x.samples) / (sigma * sigma))


class GaussianPriorDenoiser(Denoiser):
    """Exact posterior mean under a stationary Gaussian prior.

    The prior is diagonal in the Fourier basis: mean signal `mean` and
    per-frequency variances `cov_spectrum` (length L//2 + 1, orthonormal
    DFT convention, so white noise of time-domain variance s^2 has
    spectral variance s^2 per bin). Denoising applies the Wiener gain
    lambda_k / (lambda_k + sigma^2) to each bin of x - mean.
    """

    def __init__(self, mean: Signal, cov_spectrum: np.ndarray):
        lam = np.asarray(cov_spectrum, dtype=np.float64).copy()
        if lam.ndim != 1 or lam.shape[0] != len(mean) // 2 + 1:
            raise ValueError(
                f"cov_spectrum needs {len(mean) // 2 + 1} entries for length {len(mean)}"
            )
        if (lam < 0).any() or not np.isfinite(lam).all():
            raise ValueError("prior variances must be finite and non-negative")
        lam.flags.writeable = False
        self.mean = mean
        self.cov_spectrum = lam

    def _check(self, x: Signal):
        if len(x) != len(self.mean):
            raise ValueError(f"expected length {len(self.mean)}, got {len(x)}")

    def _gains(self, sigma: float) -> np.ndarray:
        lam = self.cov_spectrum
        return np.divide(
            lam,
            lam + sigma * sigma,
            out=np.zeros_like(lam),
            where=(lam + sigma * sigma) > 0,
        )

    def denoise(self, x: Signal, sigma: float) -> Signal:
        if sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {sigma}")
        self._check(x)
        if sigma == 0:
            return x
        centered = np.fft.rfft(x.samples - self.mean.samples)
        out = self.mean.samples + np.fft.irfft(self._gains(sigma) * centered, n=len(x))
        return x.with_samples(out)

    def vjp(self, x: Signal, sigma: float, v: Signal) -> Signal:
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self._check(x)
        self._check(v)
        filtered = np.fft.irfft(self._gains(sigma) * np.fft.rfft(v.samples), n=len(v))
        return v.with_samples(filtered)

    def sample(self, rng: np.random.Generator) -> Signal:
        """Draw one signal from the prior."""
        white = np.fft.rfft(rng.standard_normal(len(self.mean)))
        colored = np.fft.irfft(np.sqrt(self.cov_spectrum) * white, n=len(self.mean))
        return self.mean.with_samples(self.mean.samples + colored)


def flat_gaussian_prior(length: int, sample_rate: int, power: float = 0.02) -> GaussianPriorDenoiser:
    """Zero-mean white Gaussian prior with constant per-bin variance."""
    mean = Signal(np.zeros(length), sample_rate)
    return GaussianPriorDenoiser(mean, np.full(length // 2 + 1, power))


def pink_gaussian_prior(length: int, sample_rate: int, power: float = 0.02) -> GaussianPriorDenoiser:
    """Zero-mean pink (1/f power) Gaussian prior."""
    mean = Signal(np.zeros(length), sample_rate)
    k = np.arange(length // 2 + 1, dtype=np.float64)
    lam = power / np.maximum(k, 1.0)
    return GaussianPriorDenoiser(mean, lam)


class ShrinkageDenoiser(Denoiser):
    """Per-band multiplicative spectral gains, interpolated across noise levels.

    `gains[b, s]` is the gain for frequency band b at noise level
    `sigma_bins[s]`; at denoise time the gain for the requested sigma is
    linearly interpolated in log-sigma (clamped at the grid ends) and
    applied to every Fourier bin falling in band b.
    """

    def __init__(self, band_edges: np.ndarray, sigma_bins: np.ndarray, gains: np.ndarray):
        edges = np.asarray(band_edges, dtype=np.float64).copy()
        sig = np.asarray(sigma_bins, dtype=np.float64).copy()
        g = np.asarray(gains, dtype=np.float64).copy()
        if edges.ndim != 1 or edges.size < 2 or (np.diff(edges) <= 0).any():
            raise ValueError("band edges must be strictly increasing with >= 2 entries")
        if sig.ndim != 1 or sig.size < 1 or (sig <= 0).any() or (np.diff(sig) <= 0).any():
            raise ValueError("sigma bins must be positive and strictly increasing")
        if g.shape != (edges.size - 1, sig.size):
            raise ValueError(f"gain matrix must be {(edges.size - 1, sig.size)}, got {g.shape}")
        if (g < 0).any() or (g > 1).any() or not np.isfinite(g).all():
            raise ValueError("gains must lie in [0, 1]")
        for arr in (edges, sig, g):
            arr.flags.writeable = False
        self.band_edges = edges
        self.sigma_bins = sig
        self.gains = g
        self._band_cache: dict[tuple[int, int], np.ndarray] = {}

    def _bin_bands(self, length: int, sample_rate: int) -> np.ndarray:
        key = (length, sample_rate)
        cached = self._band_cache.get(key)
        if cached is None:
            freqs = np.arange(length // 2 + 1) * (sample_rate / length)
            idx = np.searchsorted(self.band_edges, freqs, side="right") - 1
            cached = np.clip(idx, 0, self.band_edges.size - 2)
            self._band_cache[key] = cached
        return cached

    def _bin_gains(self, x: Signal, sigma: float) -> np.ndarray:
        log_sigma = np.log(sigma)
        log_bins = np.log(self.sigma_bins)
        band_gain = np.array(
            [np.interp(log_sigma, log_bins, self.gains[b]) for b in range(self.gains.shape[0])]
        )
        return band_gain[self._bin_bands(len(x), x.sample_rate)]

    def denoise(self, x: Signal, sigma: float) -> Signal:
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        filtered = np.fft.irfft(self._bin_gains(x, sigma) * np.fft.rfft(x.samples), n=len(x))
        return x.with_samples(filtered)

    def vjp(self, x: Signal, sigma: float, v: Signal) -> Signal:
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        if len(v) != len(x):
            raise ValueError("probe length does not match input length")
        filtered = np.fft.irfft(self._bin_gains(x, sigma) * np.fft.rfft(v.samples), n=len(v))
        return v.with_samples(filtered)


def default_band_edges(sample_rate: int, n_bands: int = 24) -> np.ndarray:
    """Logarithmic band edges from 50 Hz up to Nyquist, with a DC band below."""
    nyquist = sample_rate / 2
    return np.concatenate([[0.0], np.geomspace(50.0, nyquist, n_bands)])


def train_shrinkage(
    dataset: list[Signal],
    schedule: NoiseSchedule,
    band_edges: np.ndarray | None = None,
    n_sigma_bins: int = 16,
) -> ShrinkageDenoiser:
    """Fit per-(band, sigma) Wiener gains S_b / (S_b + sigma^2) to a corpus.

    S_b is the empirical mean per-bin signal power in band b, measured so
    that white noise of variance sigma^2 contributes sigma^2 per bin
    (|X_k|^2 / L convention). This is the closed-form minimizer of the
    expected per-band denoising error, so no noise sampling is needed.
    """
    if not dataset:
        raise ValueError("training dataset is empty")
    length = len(dataset[0])
    rate = dataset[0].sample_rate
    if any(len(s) != length or s.sample_rate != rate for s in dataset):
        raise ValueError("training signals must share length and sample rate")

    if band_edges is None:
        band_edges = default_band_edges(rate)
    edges = np.asarray(band_edges, dtype=np.float64)
    if (np.diff(edges) <= 0).any():
        raise ValueError("band edges contain a zero-length band")

    n_bands = edges.size - 1
    freqs = np.arange(length // 2 + 1) * (rate / length)
    bands = np.clip(np.searchsorted(edges, freqs, side="right") - 1, 0, n_bands - 1)

    power = np.zeros(length // 2 + 1)
    for item in dataset:
        power += np.abs(np.fft.rfft(item.samples)) ** 2
    power /= len(dataset) * length

    band_power = np.zeros(n_bands)
    for b in range(n_bands):
        mask = bands == b
        if mask.any():
            band_power[b] = power[mask].mean()

    sigma_bins = np.geomspace(schedule.sigma_min, schedule.sigma_max, n_sigma_bins)
    gains = band_power[:, None] / (band_power[:, None] + sigma_bins[None, :] ** 2)
    return ShrinkageDenoiser(edges, sigma_bins, gains)


def denoising_loss(
    denoiser: Denoiser,
    dataset: list[Signal],
    sigma: float,
    rng: np.random.Generator,
    draws_per_item: int = 4,
) -> float:
    """Monte-Carlo mean-squared denoising error at one noise level.

    Per-sample MSE of denoise(x + n, sigma) against x with n drawn white
    at level sigma; the identity denoiser scores sigma^2 in expectation.
    """
    total = 0.0
    count = 0
    for item in dataset:
        for _ in range(draws_per_item):
            noisy = item.with_samples(item.samples + sigma * rng.standard_normal(len(item)))
            err = denoiser.denoise(noisy, sigma).samples - item.samples
            total += float(err @ err)
            count += len(item)
    return total / count


def save_shrinkage(denoiser: ShrinkageDenoiser, path) -> None:
    """Serialize to the versioned binary format (magic DPSD1, little-endian)."""
    with open(path, "wb") as fh:
        fh.write(SHRINKAGE_MAGIC)
        fh.write(struct.pack("<II", denoiser.band_edges.size, denoiser.sigma_bins.size))
        fh.write(denoiser.band_edges.astype("<f8").tobytes())
        fh.write(denoiser.sigma_bins.astype("<f8").tobytes())
        fh.write(denoiser.gains.astype("<f8").tobytes())


def load_shrinkage(path) -> ShrinkageDenoiser:
    """Read a denoiser written by `save_shrinkage`."""
    with open(path, "rb") as fh:
        magic = fh.read(len(SHRINKAGE_MAGIC))
        if magic != SHRINKAGE_MAGIC:
            raise ValueError(f"{path!r} is not a shrinkage denoiser file (bad magic {magic!r})")
        n_edges, n_sigma = struct.unpack("<II", fh.read(8))
        edges = np.frombuffer(fh.read(8 * n_edges), dtype="<f8")
        sigma_bins = np.frombuffer(fh.read(8 * n_sigma), dtype="<f8")
        flat = np.frombuffer(fh.read(8 * (n_edges - 1) * n_sigma), dtype="<f8")
        gains = flat.reshape(n_edges - 1, n_sigma)
    return ShrinkageDenoiser(edges, sigma_bins, gains)
