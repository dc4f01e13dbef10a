"""Deterministic synthetic vocal-like corpus.

Stands in for licensed singing-voice datasets: harmonic tones with
pitch glides, vibrato, per-harmonic decay, a slow amplitude envelope
and a faint breath-noise floor. Every item is reproducible from
(seed, index), so experiment runs are repeatable byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .audio import Signal

__all__ = ["SyntheticVoiceSpec", "synth_corpus", "synth_item"]


@dataclass(frozen=True)
class SyntheticVoiceSpec:
    """Corpus recipe: pitch range, harmonic count, modulation depths."""

    n_items: int
    duration_s: float = 2.97
    f0_range: tuple[float, float] = (180.0, 320.0)
    n_harmonics: int = 32
    vibrato_rate_range: tuple[float, float] = (4.5, 6.5)
    vibrato_cents_range: tuple[float, float] = (5.0, 20.0)
    envelope_rate_range: tuple[float, float] = (0.8, 2.5)
    envelope_depth_range: tuple[float, float] = (0.4, 0.8)
    attack_s: float = 0.08
    release_s: float = 0.12
    breath_db: float = -35.0
    sample_rate: int = 22050

    def __post_init__(self):
        if self.n_items < 0:
            raise ValueError(f"item count must be non-negative, got {self.n_items}")
        if self.duration_s <= 0:
            raise ValueError(f"duration must be positive, got {self.duration_s}")
        lo, hi = self.f0_range
        if not 0 < lo <= hi:
            raise ValueError(f"invalid f0 range {self.f0_range}")
        if self.n_harmonics < 1:
            raise ValueError(f"need at least one harmonic, got {self.n_harmonics}")
        nyquist = self.sample_rate / 2
        if hi * self.n_harmonics >= nyquist:
            raise ValueError(
                f"harmonics above Nyquist: f0 {hi} Hz x {self.n_harmonics} "
                f">= {nyquist} Hz"
            )

    @property
    def n_samples(self) -> int:
        # Rounded up to an FFT-friendly length; restoration does many
        # transforms of exactly this size.
        return scipy.fft.next_fast_len(round(self.duration_s * self.sample_rate), True)


def synth_item(spec: SyntheticVoiceSpec, seed: int, index: int) -> tuple[Signal, dict]:
    """One corpus item plus its generation parameters (f0 track etc.)."""
    rng = np.random.default_rng([seed, index])
    n = spec.n_samples
    sr = spec.sample_rate
    t = np.arange(n) / sr
    duration = n / sr

    f0_lo, f0_hi = spec.f0_range
    f0_start = rng.uniform(f0_lo, f0_hi)
    f0_end = rng.uniform(f0_lo, f0_hi)
    vib_rate = rng.uniform(*spec.vibrato_rate_range)
    vib_cents = rng.uniform(*spec.vibrato_cents_range)
    vib_phase = rng.uniform(0, 2 * np.pi)

    glide = f0_start * (f0_end / f0_start) ** (t / duration)
    vibrato = 2.0 ** (vib_cents * np.sin(2 * np.pi * vib_rate * t + vib_phase) / 1200.0)
    f0 = glide * vibrato
    phase = 2 * np.pi * np.cumsum(f0) / sr

    decay = rng.uniform(0.9, 1.5)
    nyquist_guard = 0.99 * sr / 2
    voiced = np.zeros(n)
    harmonics = []
    shift = rng.uniform(0, 2 * np.pi)
    for h in range(1, spec.n_harmonics + 1):
        if h * f0.max() >= nyquist_guard:
            break
        amp = h ** (-decay) * 10.0 ** (rng.uniform(-3.0, 3.0) / 20.0)
        # Mostly coherent harmonic phases (pulse-like, voice-like crest
        # factor) with a little jitter per partial.
        voiced += amp * np.sin(h * (phase + shift) + rng.uniform(-0.4, 0.4))
        harmonics.append(h)

    env_rate = rng.uniform(*spec.envelope_rate_range)
    env_depth = rng.uniform(*spec.envelope_depth_range)
    env_phase = rng.uniform(0, 2 * np.pi)
    envelope = 1.0 - env_depth * (0.5 + 0.5 * np.sin(2 * np.pi * env_rate * t + env_phase))
    attack = min(max(int(spec.attack_s * sr), 1), n)
    release = min(max(int(spec.release_s * sr), 1), n)
    envelope[:attack] *= 0.5 - 0.5 * np.cos(np.pi * np.arange(attack) / attack)
    envelope[-release:] *= 0.5 + 0.5 * np.cos(np.pi * np.arange(release) / release)
    voiced *= envelope

    # Breath floor: gently tilted noise well below the voiced part, so
    # reference spectra never collapse to zero above the harmonic stack.
    white = np.fft.rfft(rng.standard_normal(n))
    freqs = np.arange(n // 2 + 1) * (sr / n)
    breath = np.fft.irfft(white / np.sqrt(1.0 + freqs / 2000.0), n=n) * envelope
    voiced_rms = np.sqrt(np.mean(voiced**2))
    breath_rms = np.sqrt(np.mean(breath**2))
    if breath_rms > 0:
        breath *= voiced_rms * 10.0 ** (spec.breath_db / 20.0) / breath_rms
    samples = voiced + breath

    peak = np.abs(samples).max()
    if peak > 0:
        samples *= 0.9 / peak

    meta = {
        "f0_start": float(f0_start),
        "f0_end": float(f0_end),
        "f0": f0,
        "harmonics": harmonics,
        "vibrato_rate": float(vib_rate),
        "vibrato_cents": float(vib_cents),
    }
    return Signal(samples, sr), meta


def synth_corpus(spec: SyntheticVoiceSpec, seed: int) -> list[Signal]:
    """Generate the full corpus deterministically from the seed."""
    return [synth_item(spec, seed, idx)[0] for idx in range(spec.n_items)]
