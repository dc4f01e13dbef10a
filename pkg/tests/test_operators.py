"""Degradation operators: forward maps, adjoints, pseudo-inverses, DC rules."""

import numpy as np
import pytest

from diffrestore.audio import Signal
from diffrestore.errors import InfeasibleTargetError
from diffrestore.metrics import sdr
from diffrestore.operators import BrickwallLPF, HardClip, Measurement, clip_for_sdr, degrade

from conftest import SR, make_signal, random_signal


def tone(freq_hz, length=4096, amp=0.5, sr=SR):
    t = np.arange(length) / sr
    return Signal(amp * np.sin(2 * np.pi * freq_hz * t), sr)


def bin_tone(freq_hz, length=4096, amp=0.5, sr=SR):
    """Tone snapped to the nearest DFT bin, so it has zero spectral leakage."""
    k = round(freq_hz * length / sr)
    n = np.arange(length)
    return Signal(amp * np.sin(2 * np.pi * k * n / length), sr)


class TestHardClip:
    def test_direct_evaluation(self):
        out = HardClip(0.6).apply(make_signal([0.5, -0.9, 0.2]))
        assert np.allclose(out.samples, [0.5, -0.6, 0.2], atol=1e-15)

    def test_identity_regime(self, rng):
        x = random_signal(rng, 256, scale=0.1)
        out = HardClip(5.0).apply(x)
        assert np.array_equal(out.samples, x.samples)

    def test_odd_symmetry(self, rng):
        x = random_signal(rng, 256)
        op = HardClip(0.4)
        neg = op.apply(x.with_samples(-x.samples))
        assert np.array_equal(neg.samples, -op.apply(x).samples)

    def test_equals_clamp_exactly(self, rng):
        op = HardClip(0.3718)
        for _ in range(50):
            x = random_signal(rng, 512)
            clamp = np.minimum(np.maximum(x.samples, -op.c), op.c)
            assert np.array_equal(op.apply(x).samples, clamp)

    def test_abs_formula_within_one_ulp(self, rng):
        op = HardClip(0.52)
        for _ in range(20):
            x = random_signal(rng, 512)
            formula = (np.abs(x.samples + op.c) - np.abs(x.samples - op.c)) / 2.0
            assert np.abs(formula - op.apply(x).samples).max() <= 2.3e-16

    def test_non_expansive(self, rng):
        op = HardClip(0.5)
        for _ in range(20):
            x, y = random_signal(rng, 128), random_signal(rng, 128)
            d_out = np.linalg.norm(op.apply(x).samples - op.apply(y).samples)
            assert d_out <= np.linalg.norm(x.samples - y.samples) * (1 + 1e-12)

    def test_requires_positive_threshold(self):
        with pytest.raises(ValueError):
            HardClip(0.0)


class TestClipCalibration:
    def test_hits_target_on_vocal_like_segment(self):
        from diffrestore.synth import SyntheticVoiceSpec, synth_corpus

        item = synth_corpus(SyntheticVoiceSpec(n_items=1, duration_s=0.4), seed=8)[0]
        for target in (5.0, 10.0):
            op, clipped = clip_for_sdr(item, target)
            assert abs(sdr(item, clipped) - target) <= 0.01
            assert np.array_equal(clipped.samples, op.apply(item).samples)

    def test_unreachable_target(self, rng):
        x = random_signal(rng, 512, scale=0.3)
        with pytest.raises(InfeasibleTargetError):
            clip_for_sdr(x, 150.0)
        with pytest.raises(InfeasibleTargetError):
            clip_for_sdr(x, -5.0)

    def test_silent_input(self):
        with pytest.raises(InfeasibleTargetError, match="silent"):
            clip_for_sdr(make_signal(np.zeros(64)), 5.0)

    def test_matches_grid_search_oracle(self):
        x = tone(440.0, length=2048, amp=1.0)
        op, _ = clip_for_sdr(x, 10.0)
        # Dense independent search over thresholds.
        grid = np.linspace(1e-4, 1.0, 20000)
        sdrs = np.array([sdr(x, HardClip(c).apply(x)) for c in grid])
        best = grid[np.argmin(np.abs(sdrs - 10.0))]
        grid_sdr = sdr(x, HardClip(best).apply(x))
        bisect_sdr = sdr(x, op.apply(x))
        assert abs(bisect_sdr - grid_sdr) <= 0.01


class TestBrickwallLPF:
    def test_passband_tone_untouched(self):
        x = bin_tone(1000.0)
        out = BrickwallLPF(3000.0).apply(x)
        rel = np.linalg.norm(out.samples - x.samples) / np.linalg.norm(x.samples)
        assert rel < 1e-9

    def test_stopband_tone_removed(self):
        x = bin_tone(7000.0)
        out = BrickwallLPF(5000.0).apply(x)
        assert float(out.samples @ out.samples) < 1e-12 * float(x.samples @ x.samples)

    def test_white_noise_passband_energy_fraction(self, rng):
        x = random_signal(rng, 200_000)
        out = BrickwallLPF(5000.0).apply(x)
        ratio = float(out.samples @ out.samples) / float(x.samples @ x.samples)
        assert ratio == pytest.approx(5000 / 11025, rel=0.02)

    def test_cutoff_out_of_range(self, rng):
        x = random_signal(rng, 64)
        with pytest.raises(ValueError):
            BrickwallLPF(SR / 2).apply(x)
        with pytest.raises(ValueError):
            BrickwallLPF(-10.0)

    def test_idempotent(self, rng):
        op = BrickwallLPF(4000.0)
        for _ in range(20):
            x = random_signal(rng, 512)
            once = op.apply(x)
            twice = op.apply(once)
            rel = np.linalg.norm(twice.samples - once.samples) / np.linalg.norm(once.samples)
            assert rel < 1e-9


class TestPseudoInverse:
    @pytest.mark.parametrize("op", [HardClip(0.6), BrickwallLPF(4000.0)])
    def test_pinv_idempotent_on_range(self, rng, op):
        x = random_signal(rng, 512)
        hx = op.apply(x)
        assert np.allclose(op.pseudo_inverse(hx).samples, hx.samples, atol=1e-12)

    @pytest.mark.parametrize("op", [HardClip(0.6), BrickwallLPF(4000.0)])
    def test_h_hpinv_h_contract(self, rng, op):
        for _ in range(100):
            x = random_signal(rng, 256)
            hx = op.apply(x)
            hhh = op.apply(op.pseudo_inverse(hx))
            err = np.linalg.norm(hhh.samples - hx.samples)
            assert err < 1e-9 * max(np.linalg.norm(hx.samples), 1.0)


class TestAdjoint:
    def test_clip_indicator(self):
        op = HardClip(0.6)
        out = op.adjoint_at(make_signal([0.5, -0.9]), make_signal([1.0, 1.0]))
        assert np.array_equal(out.samples, [1.0, 0.0])

    def test_clip_identity_when_unclipped(self, rng):
        op = HardClip(5.0)
        x, v = random_signal(rng, 64), random_signal(rng, 64)
        assert np.array_equal(op.adjoint_at(x, v).samples, v.samples)

    def test_clip_boundary_counts_as_clipped(self):
        op = HardClip(0.5)
        out = op.adjoint_at(make_signal([0.5, -0.5, 0.49]), make_signal([1.0, 1.0, 1.0]))
        assert np.array_equal(out.samples, [0.0, 0.0, 1.0])

    def test_lpf_adjoint_identity(self, rng):
        op = BrickwallLPF(3000.0)
        for _ in range(40):
            u, v = random_signal(rng, 256), random_signal(rng, 256)
            lhs = float(op.apply(u).samples @ v.samples)
            rhs = float(u.samples @ op.adjoint_at(u, v).samples)
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


class TestDcProject:
    def test_clip_reliable_samples_from_measurement(self, rng):
        x = random_signal(rng, 256)
        op = HardClip(0.5)
        y = op.apply(x)
        x_hat = random_signal(rng, 256)
        out = op.dc_project(x_hat, y)
        reliable = np.abs(y.samples) < 0.5
        assert np.array_equal(out.samples[reliable], y.samples[reliable])
        assert np.array_equal(out.samples[~reliable], x_hat.samples[~reliable])
        assert np.array_equal(out.samples[reliable], x.samples[reliable])

    def test_lpf_zero_prediction_returns_measurement(self, rng):
        op = BrickwallLPF(4000.0)
        y = op.apply(random_signal(rng, 256))
        out = op.dc_project(make_signal(np.zeros(256)), y)
        assert np.allclose(out.samples, y.samples, atol=1e-12)

    def test_lpf_band_split_identity(self, rng):
        op = BrickwallLPF(4000.0)
        for _ in range(20):
            y = op.apply(random_signal(rng, 512))  # y in range(A)
            x_hat = random_signal(rng, 512)
            projected = op.dc_project(x_hat, y)
            back = op.apply(projected)
            err = np.linalg.norm(back.samples - y.samples)
            assert err < 1e-9 * max(np.linalg.norm(y.samples), 1.0)


class TestDegrade:
    def test_noiseless(self, rng):
        x = random_signal(rng, 128)
        meas = degrade(HardClip(0.4), x, sigma_y=0.0, seed=3)
        assert np.array_equal(meas.y.samples, HardClip(0.4).apply(x).samples)
        assert meas.sigma_y == 0.0

    def test_seed_determinism(self, rng):
        x = random_signal(rng, 128)
        a = degrade(BrickwallLPF(3000.0), x, sigma_y=0.05, seed=11)
        b = degrade(BrickwallLPF(3000.0), x, sigma_y=0.05, seed=11)
        assert np.array_equal(a.y.samples, b.y.samples)

    def test_noise_std_concentration(self, rng):
        x = random_signal(rng, 100_000, scale=0.1)
        op = HardClip(2.0)
        meas = degrade(op, x, sigma_y=0.01, seed=5)
        noise = meas.y.samples - op.apply(x).samples
        assert 0.0099 <= float(np.std(noise)) <= 0.0101

    def test_measurement_validation(self, rng):
        with pytest.raises(ValueError):
            Measurement(y=random_signal(rng, 8), op=HardClip(0.5), sigma_y=-0.1)
