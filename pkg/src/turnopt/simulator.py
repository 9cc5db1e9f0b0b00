"""Monte Carlo engine co-evolving forecast and position.

The forecast is stepped by its exact transition kernel; the position by the
exponential integrator x(t+dt) = exp(-gamma dt) x + (1 - exp(-gamma dt))/gamma * m(t),
which is exact for piecewise-constant forcing (first-order bias in the
m-variation term).  The recorded trading rate is the instantaneous drift
-gamma x + m, not a finite difference.

Randomness: counter-based Philox streams keyed by (seed, path index), so
serial and chunked execution produce identical ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import kernels
from .errors import DimensionMismatch, InsufficientData, InvalidConfig
from .forecasts import OUForecast1D, OUForecastND, stationary_variance, transition_nd
from .strategy import FeedbackLaw, MarketParams

STAT_NAMES = ("abs_x", "abs_xdot", "x2", "xdot2", "mx", "xmu", "objective")

# target elements per generated noise chunk (memory / generation balance)
_CHUNK_ELEMENTS = 40_000_000


@dataclass(frozen=True)
class SimConfig:
    """Discretization and ensemble layout; all times in days."""

    dt: float
    horizon: float
    burn_in: float
    n_paths: int
    seed: int
    x0: float = 0.0
    bucket_dt: float = 1.0
    stationary_start: bool = True
    mu0: Optional[float] = None

    def __post_init__(self):
        if not (0.0 < self.dt <= self.horizon):
            raise InvalidConfig(f"need 0 < dt <= horizon, got dt={self.dt}, horizon={self.horizon}")
        if not (0.0 <= self.burn_in < self.horizon):
            raise InvalidConfig(f"need 0 <= burn_in < horizon, got {self.burn_in}")
        if self.n_paths < 1:
            raise InvalidConfig(f"n_paths must be >= 1, got {self.n_paths}")
        if self.seed < 0 or self.seed > 2**64 - 1:
            raise InvalidConfig(f"seed must fit in 64 unsigned bits, got {self.seed}")
        spb = self.bucket_dt / self.dt
        if abs(spb - round(spb)) > 1e-9 * max(1.0, spb):
            raise InvalidConfig(f"bucket_dt {self.bucket_dt} is not a multiple of dt {self.dt}")
        nb = self.horizon / self.bucket_dt
        if abs(nb - round(nb)) > 1e-9 * max(1.0, nb):
            raise InvalidConfig(f"horizon {self.horizon} is not a multiple of bucket_dt")

    @property
    def steps_per_bucket(self) -> int:
        return round(self.bucket_dt / self.dt)

    @property
    def n_buckets(self) -> int:
        return round(self.horizon / self.bucket_dt)

    @property
    def n_steps(self) -> int:
        return self.n_buckets * self.steps_per_bucket

    @property
    def burn_steps(self) -> int:
        return min(round(self.burn_in / self.dt), self.n_steps - 1)


@dataclass
class SimEnsemble:
    """Per-bucket ensemble means with standard errors, plus per-path time averages.

    ``means``/``ses`` are (n_buckets, 7) arrays in STAT_NAMES order; bucket
    values are per-path averages over the bucket (the objective column is a
    per-bucket sum).  ``path_stats`` holds per-path post-burn-in time averages
    of the first six stats, feeding the jackknife estimators.
    """

    config: SimConfig
    bucket_times: np.ndarray
    means: np.ndarray
    ses: np.ndarray
    path_stats: np.ndarray
    backend: str = field(default="numpy")

    @property
    def n_paths(self) -> int:
        return self.config.n_paths

    def stat(self, name: str) -> np.ndarray:
        return self.means[:, STAT_NAMES.index(name)]

    def stat_se(self, name: str) -> np.ndarray:
        return self.ses[:, STAT_NAMES.index(name)]


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float


def _path_generator(seed: int, path_index: int) -> np.random.Generator:
    key = np.array([seed, path_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _finalize(config, bucket_sum, bucket_sumsq, path_stats, backend) -> SimEnsemble:
    n = config.n_paths
    means = bucket_sum / n
    if n > 1:
        var = (bucket_sumsq - n * means * means) / (n - 1)
        ses = np.sqrt(np.clip(var, 0.0, None) / n)
    else:
        ses = np.full_like(means, np.nan)
    times = (np.arange(config.n_buckets) + 1.0) * config.bucket_dt
    return SimEnsemble(config, times, means, ses, path_stats, backend)


def _simulate_1d(params, forecast, law, config) -> SimEnsemble:
    backend = kernels.active_backend()
    phi, nu = forecast.phi, forecast.nu
    a_mu = math.exp(-phi * config.dt)
    b_mu = math.sqrt(nu**2 * (1.0 - a_mu * a_mu) / (2.0 * phi))
    e1 = math.exp(-law.gamma * config.dt)
    e2 = (1.0 - e1) / law.gamma
    ksig2 = params.kappa * params.sigma2
    sd0 = math.sqrt(stationary_variance(forecast))
    mu_fixed = forecast.mu0 if config.mu0 is None else config.mu0

    n_steps = config.n_steps
    bucket_sum = np.zeros((config.n_buckets, kernels.N_STATS))
    bucket_sumsq = np.zeros((config.n_buckets, kernels.N_STATS))
    path_stats = np.zeros((config.n_paths, kernels.N_PATH_STATS))

    chunk = max(1, min(config.n_paths, _CHUNK_ELEMENTS // n_steps))
    for start in range(0, config.n_paths, chunk):
        stop = min(start + chunk, config.n_paths)
        noise = np.empty((stop - start, n_steps))
        mu_init = np.empty(stop - start)
        for p in range(start, stop):
            gen = _path_generator(config.seed, p)
            if config.stationary_start:
                mu_init[p - start] = sd0 * gen.standard_normal()
            else:
                mu_init[p - start] = mu_fixed
            gen.standard_normal(out=noise[p - start])
        x_init = np.full(stop - start, config.x0, dtype=float)
        kernels.run_chunk(
            noise, mu_init, x_init,
            a_mu, b_mu, law.forcing, law.gamma, e1, e2, ksig2, params.lam, config.dt,
            config.steps_per_bucket, config.burn_steps,
            bucket_sum, bucket_sumsq, path_stats[start:stop],
            backend,
        )
    return _finalize(config, bucket_sum, bucket_sumsq, path_stats, backend)


def _simulate_nd(params, forecast, law, config) -> SimEnsemble:
    n = forecast.dim
    a_mu, b_mu = transition_nd(forecast, config.dt)
    k_noise = b_mu.shape[1]
    e1 = scipy.linalg.expm(-law.gamma * config.dt)
    e2 = np.linalg.solve(law.gamma, np.eye(n) - e1)
    ksig = params.kappa * params.sigma2.values
    lam = params.lam.values
    v_inf = stationary_variance(forecast)
    w, vec = np.linalg.eigh(0.5 * (v_inf + v_inf.T))
    chol0 = vec * np.sqrt(np.clip(w, 0.0, None))
    mu_fixed = forecast.mu0

    x0 = np.asarray(config.x0, dtype=float)
    if x0.ndim == 0:
        x0 = np.full(n, float(x0))
    if x0.shape != (n,):
        raise DimensionMismatch(f"x0 shape {x0.shape} != ({n},)")

    n_steps = config.n_steps
    spb = config.steps_per_bucket
    bucket_sum = np.zeros((config.n_buckets, kernels.N_STATS))
    bucket_sumsq = np.zeros((config.n_buckets, kernels.N_STATS))
    path_stats = np.zeros((config.n_paths, kernels.N_PATH_STATS))

    chunk = max(1, min(config.n_paths, _CHUNK_ELEMENTS // (n_steps * k_noise)))
    for start in range(0, config.n_paths, chunk):
        stop = min(start + chunk, config.n_paths)
        nc = stop - start
        noise = np.empty((nc, n_steps, k_noise))
        mu = np.empty((nc, n))
        for p in range(start, stop):
            gen = _path_generator(config.seed, p)
            if config.stationary_start:
                mu[p - start] = chol0 @ gen.standard_normal(n)
            else:
                mu[p - start] = mu_fixed
            gen.standard_normal(out=noise[p - start])
        x = np.tile(x0, (nc, 1))
        acc = np.zeros((nc, kernels.N_STATS))
        post = np.zeros((nc, kernels.N_PATH_STATS))
        vals = np.empty((nc, kernels.N_STATS))
        bucket = 0
        for k in range(n_steps):
            m = mu @ law.forcing.T
            x = x @ e1.T + m @ e2.T
            mu = mu @ a_mu.T + noise[:, k] @ b_mu.T
            m = mu @ law.forcing.T
            xd = -(x @ law.gamma.T) + m
            vals[:, 0] = np.sqrt(np.einsum("ij,ij->i", x, x))
            vals[:, 1] = np.sqrt(np.einsum("ij,ij->i", xd, xd))
            vals[:, 2] = np.einsum("ij,ij->i", x, x)
            vals[:, 3] = np.einsum("ij,ij->i", xd, xd)
            vals[:, 4] = np.einsum("ij,ij->i", m, x)
            vals[:, 5] = np.einsum("ij,ij->i", x, mu)
            risk = np.einsum("ij,ij->i", x @ ksig, x)
            cost = np.einsum("ij,ij->i", xd @ lam, xd)
            vals[:, 6] = (vals[:, 5] - 0.5 * risk - 0.5 * cost) * config.dt
            acc += vals
            if k >= config.burn_steps:
                post += vals[:, : kernels.N_PATH_STATS]
            if (k + 1) % spb == 0:
                acc[:, : kernels.N_PATH_STATS] /= spb
                bucket_sum[bucket] += acc.sum(axis=0)
                bucket_sumsq[bucket] += (acc * acc).sum(axis=0)
                acc[:] = 0.0
                bucket += 1
        path_stats[start:stop] = post / (n_steps - config.burn_steps)
    return _finalize(config, bucket_sum, bucket_sumsq, path_stats, "numpy")


def simulate(
    params: MarketParams, forecast, law: FeedbackLaw, config: SimConfig
) -> SimEnsemble:
    """Run the ensemble and aggregate per-bucket statistics.

    Deterministic for a fixed config (seed included) regardless of chunking.
    """
    if params.is_scalar != law.is_scalar:
        raise DimensionMismatch("market parameters and law disagree on dimensionality")
    if params.is_scalar:
        if not isinstance(forecast, OUForecast1D):
            raise DimensionMismatch("scalar simulation requires a 1D forecast")
        return _simulate_1d(params, forecast, law, config)
    if not isinstance(forecast, OUForecastND) or forecast.dim != params.dim:
        raise DimensionMismatch("market and forecast dimensions disagree")
    return _simulate_nd(params, forecast, law, config)


def _jackknife_ratio(num: np.ndarray, den: np.ndarray, transform=None) -> Estimate:
    """Leave-one-path-out jackknife for mean(num)/f(mean(den)) ratios."""
    n = num.size
    f = transform if transform is not None else (lambda v: v)
    value = num.mean() / f(den.mean())
    if n < 2:
        return Estimate(value, float("nan"))
    loo_num = (num.sum() - num) / (n - 1)
    loo_den = (den.sum() - den) / (n - 1)
    reps = loo_num / f(loo_den)
    se = math.sqrt((n - 1) / n * np.sum((reps - reps.mean()) ** 2))
    return Estimate(value, se)


def estimate_turnover(ensemble: SimEnsemble) -> Estimate:
    """Post-burn-in time-averaged E|xdot| / E|x| with jackknife standard error."""
    stats = ensemble.path_stats
    if stats.shape[0] == 0 or ensemble.config.burn_steps >= ensemble.config.n_steps:
        raise InsufficientData("no post-burn-in data")
    den = stats[:, 0]
    num = stats[:, 1]
    if den.mean() == 0.0:
        raise InsufficientData("denominator E|x| is identically zero")
    return _jackknife_ratio(num, den)


def estimate_ir(ensemble: SimEnsemble, params: MarketParams, forecast) -> Estimate:
    """Empirical information ratio: (E[x mu] - lam/2 E[xdot^2]) / sqrt(sigma2 E[x^2])."""
    if not params.is_scalar:
        raise DimensionMismatch("IR estimation is 1D only")
    if forecast.nu == 0.0:
        raise InsufficientData("noiseless forecast has no steady-state moments")
    stats = ensemble.path_stats
    num = stats[:, 5] - 0.5 * params.lam * stats[:, 3]
    den = stats[:, 2]
    if den.mean() <= 0.0:
        raise InsufficientData("E[x^2] is zero")
    sigma = math.sqrt(params.sigma2)
    return _jackknife_ratio(num, den, transform=lambda v: sigma * np.sqrt(v))
