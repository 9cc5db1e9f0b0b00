import math

import numpy as np
import pytest

from turnopt import (
    OUForecast1D,
    OUForecastND,
    conditional_mean,
    sample_step,
    stationary_variance,
)
from turnopt.forecasts import transition_1d, transition_nd


class TestConditionalMean:
    def test_zero_horizon(self):
        f = OUForecast1D(phi=0.2, nu=0.1)
        assert conditional_mean(f, 1.0, 0.0) == 1.0

    def test_half_life(self):
        f = OUForecast1D(phi=0.2, nu=0.1)
        assert conditional_mean(f, 1.0, f.half_life) == pytest.approx(0.5, rel=1e-14)

    def test_diagonal_matrix(self):
        f = OUForecastND(np.diag([0.1, 0.2]), np.zeros((2, 2)))
        out = conditional_mean(f, np.array([1.0, 1.0]), 10.0)
        assert np.allclose(out, [math.exp(-1.0), math.exp(-2.0)], rtol=1e-12)

    def test_markov_consistency(self):
        f = OUForecast1D(phi=0.37, nu=0.1)
        h1, h2 = 1.3, 4.2
        two_step = conditional_mean(f, conditional_mean(f, 2.5, h1), h2)
        assert two_step == pytest.approx(conditional_mean(f, 2.5, h1 + h2), rel=1e-14)

    def test_negative_horizon(self):
        with pytest.raises(ValueError):
            conditional_mean(OUForecast1D(phi=0.2, nu=0.1), 1.0, -1.0)


class TestSampleStep:
    def test_noiseless_half_life(self):
        f = OUForecast1D(phi=math.log(2.0), nu=0.0)
        assert sample_step(f, 1.0, 1.0, 0.7) == pytest.approx(0.5, rel=1e-15)

    def test_large_phi_variance_limit(self):
        f = OUForecast1D(phi=500.0, nu=0.1)
        _, sd = transition_1d(f, 1.0)
        assert sd**2 == pytest.approx(stationary_variance(f), rel=1e-12)

    def test_one_step_stationary_variance(self):
        f = OUForecast1D(phi=0.2, nu=0.1)
        rng = np.random.default_rng(2)
        n = 10**6
        mu0 = rng.standard_normal(n) * math.sqrt(stationary_variance(f))
        decay, sd = transition_1d(f, 1.0)
        mu1 = decay * mu0 + sd * rng.standard_normal(n)
        var = mu1.var(ddof=1)
        se = stationary_variance(f) * math.sqrt(2.0 / (n - 1))
        assert abs(var - 0.025) <= 3.0 * se

    def test_two_step_composition_variance(self):
        # stepping dt twice has the same transition variance as one step of 2 dt
        f = OUForecast1D(phi=0.31, nu=0.17)
        dt = 0.7
        d1, s1 = transition_1d(f, dt)
        d2, s2 = transition_1d(f, 2.0 * dt)
        assert d1 * d1 == pytest.approx(d2, rel=1e-14)
        assert d1 * d1 * s1 * s1 + s1 * s1 == pytest.approx(s2 * s2, rel=1e-14)

    def test_ensemble_decay_matches_conditional_mean(self):
        f = OUForecast1D(phi=0.2, nu=0.1)
        rng = np.random.default_rng(9)
        n = 10**5
        mu_t = 0.8
        for h in (0.1 / f.phi, 1.0 / f.phi, 10.0 / f.phi):
            decay, sd = transition_1d(f, h)
            sample = decay * mu_t + sd * rng.standard_normal(n)
            se = sd / math.sqrt(n)
            assert abs(sample.mean() - conditional_mean(f, mu_t, h)) <= 4.0 * se


class TestStationaryVariance:
    def test_scalar(self):
        assert stationary_variance(OUForecast1D(phi=0.2, nu=0.1)) == pytest.approx(0.025)

    def test_noiseless(self):
        assert stationary_variance(OUForecast1D(phi=0.2, nu=0.0)) == 0.0

    def test_diagonal_nd(self):
        f = OUForecastND(np.diag([0.3, 0.7]), np.diag([0.1, 0.2]))
        v = stationary_variance(f)
        assert np.allclose(v, np.diag([0.01 / 0.6, 0.04 / 1.4]), rtol=1e-10)

    def test_nd_transition_covariance(self):
        rng = np.random.default_rng(3)
        phi = np.diag([0.2, 0.5]) + 0.05 * rng.standard_normal((2, 2))
        f = OUForecastND(phi, rng.standard_normal((2, 2)) * 0.1)
        a, b = transition_nd(f, 0.5)
        v = stationary_variance(f)
        # stationarity: V = A V A' + B B'
        assert np.allclose(a @ v @ a.T + b @ b.T, v, atol=1e-12 * np.linalg.norm(v))


class TestInvariants:
    def test_phi_positive_required(self):
        with pytest.raises(ValueError):
            OUForecast1D(phi=0.0, nu=0.1)

    def test_nu_nonnegative_required(self):
        with pytest.raises(ValueError):
            OUForecast1D(phi=0.1, nu=-0.1)

    def test_half_life(self):
        assert OUForecast1D(phi=0.2, nu=0.1).half_life == pytest.approx(math.log(2) / 0.2)

    def test_nd_requires_stable_spectrum(self):
        with pytest.raises(ValueError):
            OUForecastND(np.diag([0.1, -0.2]), np.zeros((2, 2)))
