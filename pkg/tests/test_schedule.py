"""Noise ladder construction, churn arithmetic and progress mapping."""

import math

import mpmath
import numpy as np
import pytest

from diffrestore.schedule import build_schedule, churn_gamma, progress, NoiseSchedule, Progress


def mp_sigma(i: int, steps: int, nu: float, smin: float, smax: float) -> float:
    """Arbitrary-precision evaluation of the ladder formula."""
    with mpmath.workdps(60):
        nu = mpmath.mpf(nu)
        smin = mpmath.mpf(smin)
        smax = mpmath.mpf(smax)
        ramp = mpmath.mpf(i) / (steps - 1)
        value = (smax ** (1 / nu) + ramp * (smin ** (1 / nu) - smax ** (1 / nu))) ** nu
        return float(value)


class TestBuildSchedule:
    def test_reference_endpoints_exact(self):
        sched = build_schedule(300, nu=13.0, sigma_min=1e-4, sigma_max=1.0, s_churn=5.0)
        assert abs(float(sched.sigmas[0]) - 1.0) <= 1e-12
        assert abs(float(sched.sigmas[-1]) - 1e-4) <= 1e-12

    def test_linear_when_nu_is_one(self):
        sched = build_schedule(3, nu=1.0, sigma_min=0.1, sigma_max=1.0, s_churn=0.0)
        assert np.allclose(sched.sigmas, [1.0, 0.55, 0.1], atol=1e-15)

    @pytest.mark.parametrize("i", [1, 77, 149, 250, 298])
    def test_interior_matches_high_precision_oracle(self, i):
        sched = build_schedule(300, nu=13.0, sigma_min=1e-4, sigma_max=1.0, s_churn=5.0)
        expected = mp_sigma(i, 300, 13.0, 1e-4, 1.0)
        assert float(sched.sigmas[i]) == pytest.approx(expected, rel=1e-13)

    def test_strictly_decreasing_property(self, rng):
        for _ in range(30):
            steps = int(rng.integers(2, 500))
            nu = float(rng.uniform(0.3, 20))
            smin = float(10 ** rng.uniform(-6, -1))
            smax = smin * float(10 ** rng.uniform(0.3, 4))
            sched = build_schedule(steps, nu=nu, sigma_min=smin, sigma_max=smax, s_churn=0.0)
            assert (np.diff(sched.sigmas) < 0).all()
            assert abs(float(sched.sigmas[0]) - smax) <= 1e-12 * max(1.0, smax)
            assert abs(float(sched.sigmas[-1]) - smin) <= 1e-12

    def test_nu_continuity(self):
        a = build_schedule(300, nu=13.0, sigma_min=1e-4, sigma_max=1.0, s_churn=0.0)
        b = build_schedule(300, nu=13.0 + 1e-6, sigma_min=1e-4, sigma_max=1.0, s_churn=0.0)
        assert np.abs(a.sigmas - b.sigmas).max() < 1e-4

    def test_rejects_bad_bounds(self):
        with pytest.raises(ValueError):
            build_schedule(10, sigma_min=0.5, sigma_max=0.1)
        with pytest.raises(ValueError):
            build_schedule(10, sigma_min=0.0, sigma_max=1.0)
        with pytest.raises(ValueError):
            build_schedule(10, sigma_min=0.1, sigma_max=math.inf)
        with pytest.raises(ValueError):
            build_schedule(1)
        with pytest.raises(ValueError):
            build_schedule(10, nu=-2.0)

    def test_schedule_type_rejects_increasing(self):
        with pytest.raises(ValueError):
            NoiseSchedule(np.array([0.1, 1.0]), nu=1.0, sigma_min=0.1, sigma_max=1.0, s_churn=0.0)


class TestChurn:
    def test_reference_gamma(self):
        sched = build_schedule(300, s_churn=5.0)
        gammas = np.array([churn_gamma(sched, i) for i in range(300)])
        assert np.allclose(gammas, 1 / 60, atol=1e-15)

    def test_disabled(self):
        sched = build_schedule(300, s_churn=0.0)
        assert churn_gamma(sched, 10) == 0.0

    def test_cap(self):
        sched = build_schedule(300, s_churn=1000.0)
        assert churn_gamma(sched, 5) == pytest.approx(math.sqrt(2) - 1)

    def test_activity_band(self):
        sched = build_schedule(300, s_churn=5.0, s_tmin=0.01, s_tmax=0.5)
        assert churn_gamma(sched, 0) == 0.0  # sigma_0 = 1 above band
        assert churn_gamma(sched, 299) == 0.0  # sigma_min below band
        mid = 150
        assert 0.01 <= float(sched.sigmas[mid]) <= 0.5
        assert churn_gamma(sched, mid) == pytest.approx(1 / 60)


class TestProgress:
    def test_endpoints(self):
        sched = build_schedule(300)
        assert progress(sched, 0).value == 0.0
        assert progress(sched, 299).value == 1.0

    def test_interior(self):
        sched = build_schedule(300)
        assert progress(sched, 150).value == pytest.approx(150 / 299)

    def test_out_of_range(self):
        sched = build_schedule(10)
        with pytest.raises(IndexError):
            progress(sched, 10)
        with pytest.raises(ValueError):
            Progress(1.5)
