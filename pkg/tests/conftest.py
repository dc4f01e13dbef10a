import numpy as np
import pytest

from diffrestore.audio import Signal
from diffrestore.denoisers import Denoiser

SR = 22050


@pytest.fixture
def rng():
    return np.random.default_rng(0xA5D1)


def make_signal(samples, sr=SR) -> Signal:
    return Signal(np.asarray(samples, dtype=np.float64), sr)


def random_signal(rng, length, scale=1.0, sr=SR) -> Signal:
    return Signal(scale * rng.standard_normal(length), sr)


class IdentityDenoiser(Denoiser):
    """denoise(x, sigma) = x; exercises the generic FD vjp fallback."""

    def denoise(self, x, sigma):
        return x


class TanhDenoiser(Denoiser):
    """Mild nonlinear denoiser without an analytic vjp override."""

    def denoise(self, x, sigma):
        return x.with_samples(0.9 * np.tanh(x.samples))


class BlowupDenoiser(Denoiser):
    """Returns non-finite output once sigma drops below a threshold."""

    def __init__(self, below=0.5):
        self.below = below

    def denoise(self, x, sigma):
        if sigma < self.below:
            bad = x.samples.copy()
            bad[0] = np.inf
            return x.with_samples(bad)
        return x

    def vjp(self, x, sigma, v):
        return v
