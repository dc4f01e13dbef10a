"""SI-SDR, SDR and LSD behavior."""

import numpy as np
import pytest

from diffrestore.audio import Spectrum, stft
from diffrestore.metrics import MetricReport, lsd, lsd_frames, sdr, si_sdr
from diffrestore.operators import clip_for_sdr

from conftest import SR, make_signal, random_signal


class TestSiSdr:
    def test_identical_capped(self, rng):
        x = random_signal(rng, 256)
        assert si_sdr(x, x) == 100.0

    def test_scale_absorbed(self, rng):
        x = random_signal(rng, 256)
        assert si_sdr(x, x.with_samples(2.0 * x.samples)) == 100.0

    def test_orthogonal_noise_ten_db(self, rng):
        ref = random_signal(rng, 4096)
        raw = rng.standard_normal(4096)
        # Orthogonalize the noise against the reference, then set its
        # energy to one tenth of the reference energy.
        raw -= (raw @ ref.samples) / (ref.samples @ ref.samples) * ref.samples
        raw *= np.sqrt((ref.samples @ ref.samples) / 10.0) / np.linalg.norm(raw)
        est = ref.with_samples(ref.samples + raw)
        assert si_sdr(ref, est) == pytest.approx(10.0, abs=1e-9)

    def test_scale_invariance_property(self, rng):
        for _ in range(20):
            ref = random_signal(rng, 512)
            est = ref.with_samples(ref.samples + 0.2 * rng.standard_normal(512))
            alpha = float(rng.uniform(0.1, 8.0))
            a = si_sdr(ref, est)
            b = si_sdr(ref, est.with_samples(alpha * est.samples))
            assert a == pytest.approx(b, abs=1e-9)

    def test_silent_reference(self, rng):
        with pytest.raises(ValueError, match="silent"):
            si_sdr(make_signal(np.zeros(16)), random_signal(rng, 16))


class TestSdr:
    def test_identical_capped(self, rng):
        x = random_signal(rng, 64)
        assert sdr(x, x) == 100.0

    def test_equal_error_energy_zero_db(self, rng):
        x = random_signal(rng, 64)
        assert sdr(x, x.with_samples(np.zeros(64))) == pytest.approx(0.0, abs=1e-12)

    def test_closes_clip_calibration_loop(self):
        from diffrestore.synth import SyntheticVoiceSpec, synth_corpus

        item = synth_corpus(SyntheticVoiceSpec(n_items=1, duration_s=0.3), seed=6)[0]
        _, clipped = clip_for_sdr(item, 5.0)
        assert sdr(item, clipped) == pytest.approx(5.0, abs=0.01)


class TestLsd:
    def test_identical_zero(self, rng):
        x = random_signal(rng, 4096, scale=0.3)
        assert lsd(x, x) == 0.0

    def test_constant_ratio_twenty(self, rng):
        # White noise keeps every STFT bin far above the epsilon floor.
        x = random_signal(rng, 8192, scale=0.3)
        scaled = x.with_samples(10.0 * x.samples)
        assert lsd(x, scaled) == pytest.approx(20.0, abs=0.05)

    def test_symmetry(self, rng):
        a = random_signal(rng, 4096, scale=0.2)
        b = a.with_samples(a.samples + 0.05 * rng.standard_normal(4096))
        assert lsd(a, b) == pytest.approx(lsd(b, a), abs=1e-9)
        assert lsd(a, b) >= 0.0

    def test_two_band_closed_form(self):
        """Piecewise-constant magnitudes against the hand-computed average."""
        n_bins = 513
        split = 200
        ref_mag = np.ones(n_bins)
        est_mag = np.ones(n_bins)
        est_mag[:split] = 0.1   # +20 dB power ratio per bin below the split
        est_mag[split:] = 10.0  # -20 dB above
        ref = [Spectrum(ref_mag.astype(complex), 1.0)] * 3
        est = [Spectrum(est_mag.astype(complex), 1.0)] * 3
        # Every bin contributes (+-20)^2, so the RMS is exactly 20 (up to
        # the epsilon regularizer's ~4e-8 shift).
        assert lsd_frames(ref, est) == pytest.approx(20.0, abs=1e-6)
        uneven = est_mag.copy()
        uneven[split:] = 1.0  # only the low band differs now
        est2 = [Spectrum(uneven.astype(complex), 1.0)] * 3
        expected = np.sqrt(split * 400.0 / n_bins)
        assert lsd_frames(ref, est2) == pytest.approx(expected, abs=1e-6)

    def test_length_mismatch(self, rng):
        with pytest.raises(ValueError):
            lsd(random_signal(rng, 64), random_signal(rng, 65))


def test_metric_report_fields():
    row = MetricReport(
        file="a", task="declip", severity="5", method="rg",
        si_sdr_db=1.0, sdr_db=2.0, lsd=3.0,
    )
    assert row.file == "a" and row.lsd == 3.0
