"""Signal container, WAV I/O and Fourier utility tests."""

import numpy as np
import pytest
from scipy.io import wavfile

from diffrestore.audio import Signal, Spectrum, irfft, load_wav, rfft, save_wav, stft
from diffrestore.errors import NonFiniteSignalError, UnsupportedWavError

from conftest import SR, make_signal, random_signal


def direct_dft_half(x: np.ndarray) -> np.ndarray:
    """O(n^2) direct-summation DFT oracle, half spectrum."""
    n = len(x)
    k = np.arange(n // 2 + 1)[:, None]
    j = np.arange(n)[None, :]
    return (x[None, :] * np.exp(-2j * np.pi * k * j / n)).sum(axis=1)


class TestSignal:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Signal(np.array([]), SR)

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteSignalError):
            Signal(np.array([0.0, np.nan]), SR)

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            Signal(np.zeros(4), 0)

    def test_samples_frozen(self):
        s = make_signal([0.1, 0.2])
        with pytest.raises(ValueError):
            s.samples[0] = 5.0

    def test_source_array_detached(self):
        buf = np.zeros(4)
        s = Signal(buf, SR)
        buf[0] = 9.0
        assert s.samples[0] == 0.0


class TestWavIO:
    def test_pcm16_positive_full_scale(self, tmp_path):
        path = tmp_path / "a.wav"
        wavfile.write(path, SR, np.array([32767], dtype=np.int16))
        sig = load_wav(path)
        assert sig.samples[0] == pytest.approx(32767 / 32768, abs=1e-12)

    def test_pcm16_negative_full_scale(self, tmp_path):
        path = tmp_path / "a.wav"
        wavfile.write(path, SR, np.array([-32768], dtype=np.int16))
        assert load_wav(path).samples[0] == -1.0

    def test_stereo_downmix_mean(self, tmp_path):
        path = tmp_path / "st.wav"
        frames = np.tile(np.array([[0.2, 0.4]], dtype=np.float32), (8, 1))
        wavfile.write(path, SR, frames)
        sig = load_wav(path)
        assert np.allclose(sig.samples, 0.3, atol=1e-7)

    def test_unsupported_encoding_named(self, tmp_path):
        path = tmp_path / "u8.wav"
        wavfile.write(path, SR, np.array([0, 128, 255], dtype=np.uint8))
        with pytest.raises(UnsupportedWavError, match="uint8"):
            load_wav(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_wav(tmp_path / "nope.wav")

    def test_float32_round_trip_exact(self, tmp_path, rng):
        samples = rng.standard_normal(512).astype(np.float32).astype(np.float64)
        sig = Signal(0.5 * samples, SR)
        sig = Signal(sig.samples.astype(np.float32).astype(np.float64), SR)
        path = tmp_path / "f.wav"
        save_wav(sig, path, encoding="float32")
        back = load_wav(path)
        assert np.array_equal(back.samples, sig.samples)
        assert back.sample_rate == SR

    def test_pcm16_round_trip_bound(self, tmp_path, rng):
        sig = make_signal(np.clip(0.4 * rng.standard_normal(2048), -1.0, 1.0))
        path = tmp_path / "p.wav"
        save_wav(sig, path, encoding="pcm16")
        back = load_wav(path)
        assert np.abs(back.samples - sig.samples).max() <= 1 / 32768

    def test_pcm16_full_scale_round_trip_bound(self, tmp_path):
        sig = make_signal([1.0, -1.0, 0.999, -0.999])
        path = tmp_path / "fs.wav"
        save_wav(sig, path, encoding="pcm16")
        back = load_wav(path)
        assert np.abs(back.samples - sig.samples).max() <= 1 / 32768

    def test_pcm16_limits_and_warns(self, tmp_path):
        sig = make_signal([1.5, 0.0])
        path = tmp_path / "hot.wav"
        with pytest.warns(UserWarning, match="hard-limited"):
            save_wav(sig, path, encoding="pcm16")
        back = load_wav(path)
        assert back.samples[0] == pytest.approx(1.0, abs=1 / 32768)

    def test_unknown_encoding(self, tmp_path):
        with pytest.raises(ValueError, match="encoding"):
            save_wav(make_signal([0.0]), tmp_path / "x.wav", encoding="mp3")


class TestFourier:
    def test_impulse_is_flat(self):
        spec = rfft(make_signal([1.0, 0.0, 0.0, 0.0]))
        assert np.allclose(spec.bins, [1, 1, 1])
        assert spec.bin_hz == SR / 4

    def test_dc_only(self):
        spec = rfft(make_signal([1.0, 1.0, 1.0, 1.0]))
        assert np.allclose(spec.bins, [4, 0, 0])

    def test_round_trip_long(self, rng):
        sig = random_signal(rng, 1024)
        back = irfft(rfft(sig), 1024)
        err = np.linalg.norm(back.samples - sig.samples) / np.linalg.norm(sig.samples)
        assert err < 1e-9

    @pytest.mark.parametrize("length", [8, 17, 33, 64])
    def test_matches_direct_summation_oracle(self, rng, length):
        sig = random_signal(rng, length)
        expected = direct_dft_half(sig.samples)
        got = rfft(sig).bins
        assert np.allclose(got, expected, rtol=1e-9, atol=1e-9)

    def test_round_trip_property(self, rng):
        for _ in range(25):
            length = int(rng.integers(2, 400))
            sig = random_signal(rng, length)
            back = irfft(rfft(sig), length)
            err = np.linalg.norm(back.samples - sig.samples)
            assert err < 1e-9 * max(np.linalg.norm(sig.samples), 1.0)

    def test_linearity(self, rng):
        for _ in range(10):
            x = random_signal(rng, 128)
            y = random_signal(rng, 128)
            a, b = rng.standard_normal(2)
            combo = rfft(make_signal(a * x.samples + b * y.samples))
            direct = a * rfft(x).bins + b * rfft(y).bins
            assert np.allclose(combo.bins, direct, rtol=1e-9, atol=1e-12)

    def test_parseval(self, rng):
        for _ in range(10):
            length = int(rng.integers(16, 300))
            sig = random_signal(rng, length)
            e = np.abs(rfft(sig).bins) ** 2
            spec_energy = e[0] + 2 * e[1:].sum()
            if length % 2 == 0:
                spec_energy -= e[-1]  # Nyquist bin has no conjugate partner
            time_energy = float(sig.samples @ sig.samples)
            assert spec_energy / length == pytest.approx(time_energy, rel=1e-9)

    def test_irfft_length_mismatch(self, rng):
        spec = rfft(random_signal(rng, 64))
        with pytest.raises(ValueError, match="bins"):
            irfft(spec, 62)


class TestStft:
    def test_exact_fit_single_frame(self, rng):
        frames = stft(random_signal(rng, 1024), window=1024, hop=256)
        assert len(frames) == 1

    def test_ceil_rule_two_frames(self, rng):
        frames = stft(random_signal(rng, 1025), window=1024, hop=256)
        assert len(frames) == 2

    def test_tone_peak_bin(self):
        n = 4096
        t = np.arange(n) / SR
        tone = make_signal(0.5 * np.sin(2 * np.pi * 1000.0 * t))
        frames = stft(tone, window=1024, hop=256)
        mags = np.abs(frames[4].bins)
        assert np.argmax(mags) == round(1000 * 1024 / SR)

    def test_short_signal_padded(self, rng):
        frames = stft(random_signal(rng, 100), window=256, hop=64)
        assert len(frames) == 1

    def test_bad_window_hop(self, rng):
        sig = random_signal(rng, 256)
        with pytest.raises(ValueError):
            stft(sig, window=64, hop=128)
        with pytest.raises(ValueError):
            stft(sig, window=64, hop=0)
