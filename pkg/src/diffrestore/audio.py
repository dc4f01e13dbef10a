"""Waveform container, WAV I/O and Fourier utilities.

Everything downstream (operators, denoisers, metrics) works on `Signal`
values: mono float64 waveforms tagged with a sample rate. All operations
are pure and return new objects; sample buffers are frozen on
construction so signals can be shared freely between concurrent jobs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile

from .errors import NonFiniteSignalError, UnsupportedWavError

__all__ = [
    "Signal",
    "Spectrum",
    "load_wav",
    "save_wav",
    "rfft",
    "irfft",
    "stft",
]

PCM16_FULL_SCALE = 32768.0


@dataclass(frozen=True)
class Signal:
    """Mono waveform: float64 samples (nominally in [-1, 1]) plus a sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("signal must be a non-empty 1-D sample array")
        if not np.isfinite(arr).all():
            raise NonFiniteSignalError("signal contains non-finite samples")
        if not (int(self.sample_rate) > 0):
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if arr is not self.samples or arr.flags.writeable:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "Signal":
        """New signal with the same rate. Validates like the constructor."""
        return Signal(samples, self.sample_rate)


@dataclass(frozen=True)
class Spectrum:
    """Half spectrum of a real signal: complex bins plus bin spacing in Hz."""

    bins: np.ndarray
    bin_hz: float

    def __post_init__(self):
        arr = np.asarray(self.bins, dtype=np.complex128)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("spectrum must be a non-empty 1-D bin array")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "bins", arr)
        object.__setattr__(self, "bin_hz", float(self.bin_hz))

    def __len__(self) -> int:
        return self.bins.shape[0]


def load_wav(path) -> Signal:
    """Read a WAV file as a mono float64 signal in [-1, 1].

    Multichannel content is averaged to mono. Integer PCM is scaled by its
    full-scale value; float content is taken as-is. Unsupported encodings
    raise `UnsupportedWavError` naming the offending format.
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:  # wavfile raises bare ValueError on bad RIFF
        raise UnsupportedWavError(f"cannot read WAV file {path!r}: {exc}") from exc

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_FULL_SCALE
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise UnsupportedWavError(
            f"unsupported WAV encoding {data.dtype.name!r} in {path!r} "
            "(supported: 16/32-bit PCM, 32/64-bit float)"
        )

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.size == 0:
        raise UnsupportedWavError(f"WAV file {path!r} contains no samples")
    return Signal(samples, int(rate))


def save_wav(signal: Signal, path, encoding: str = "float32") -> None:
    """Write a signal as PCM16 or IEEE float32 WAV.

    PCM16 hard-limits samples to [-1, 1] (with a warning when any sample
    is limited); float32 writes samples unchanged.
    """
    if encoding == "pcm16":
        samples = signal.samples
        if np.abs(samples).max() > 1.0:
            warnings.warn(
                "samples outside [-1, 1] hard-limited for pcm16 output",
                stacklevel=2,
            )
            samples = np.clip(samples, -1.0, 1.0)
        ints = np.clip(np.rint(samples * PCM16_FULL_SCALE), -32768, 32767)
        wavfile.write(path, signal.sample_rate, ints.astype(np.int16))
    elif encoding == "float32":
        wavfile.write(path, signal.sample_rate, signal.samples.astype(np.float32))
    else:
        raise ValueError(f"unknown WAV encoding {encoding!r} (use pcm16 or float32)")


def rfft(signal: Signal) -> Spectrum:
    """Half-spectrum DFT of a real signal (unnormalized, numpy convention)."""
    bins = np.fft.rfft(signal.samples)
    return Spectrum(bins, signal.sample_rate / len(signal))


def irfft(spec: Spectrum, length: int) -> Signal:
    """Inverse of `rfft` for a known output length.

    The spectrum must have length//2 + 1 bins; anything else is a
    length mismatch.
    """
    if length <= 0:
        raise ValueError(f"output length must be positive, got {length}")
    if len(spec) != length // 2 + 1:
        raise ValueError(
            f"spectrum has {len(spec)} bins; length {length} needs {length // 2 + 1}"
        )
    samples = np.fft.irfft(spec.bins, n=length)
    sample_rate = int(round(spec.bin_hz * length))
    return Signal(samples, max(sample_rate, 1))


def stft(signal: Signal, window: int, hop: int) -> list[Spectrum]:
    """Hann-windowed STFT with tail zero-padding so every sample is covered.

    Frame count is ceil((L - window)/hop) + 1 (at least one frame); the
    signal is zero-padded up to (frames-1)*hop + window.
    """
    if hop < 1 or window < hop:
        raise ValueError(f"need window >= hop >= 1, got window={window} hop={hop}")
    length = len(signal)
    n_frames = int(np.ceil((length - window) / hop)) + 1 if length > window else 1
    padded_len = (n_frames - 1) * hop + window
    padded = np.zeros(padded_len)
    padded[:length] = signal.samples
    win = np.hanning(window)
    bin_hz = signal.sample_rate / window
    frames = []
    for f in range(n_frames):
        start = f * hop
        frames.append(Spectrum(np.fft.rfft(padded[start : start + window] * win), bin_hz))
    return frames
