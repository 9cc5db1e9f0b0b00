"""Hot single-asset simulation kernels: numba-jitted with a pure-numpy fallback.

Backend selection: environment variable ``TURNOPT_BACKEND`` set to ``numba``
or ``numpy``; default is numba when importable.  Both backends implement the
same recursion in the same per-path order, so each is deterministic for a
fixed seed (bit patterns may differ between backends because the numpy
reduction across paths uses pairwise summation).

Per-step stat order (columns of the bucket accumulators):
    0 |x|, 1 |xdot|, 2 x^2, 3 xdot^2, 4 m*x, 5 x*mu, 6 objective increment.
Buckets hold across-path sums (and sums of squares) of per-path bucket
averages; the objective column is a per-bucket sum, not an average.
"""

from __future__ import annotations

import os

import numpy as np

N_STATS = 7
N_PATH_STATS = 6

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def active_backend() -> str:
    choice = os.environ.get("TURNOPT_BACKEND", "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        raise ValueError(f"TURNOPT_BACKEND must be 'numba' or 'numpy', got {choice!r}")
    if choice == "":
        return "numba" if HAVE_NUMBA else "numpy"
    if choice == "numba" and not HAVE_NUMBA:
        raise RuntimeError("TURNOPT_BACKEND=numba but numba is not importable")
    return choice


def _sim_chunk_numpy(
    noise, mu_init, x_init,
    a_mu, b_mu, fcoef, gamma, e1, e2, ksig2, lam, dt,
    steps_per_bucket, burn_steps,
    bucket_sum, bucket_sumsq, path_stats,
):
    n_chunk, n_steps = noise.shape
    mu = mu_init.copy()
    x = x_init.copy()
    acc = np.zeros((n_chunk, N_STATS))
    post = np.zeros((n_chunk, N_PATH_STATS))
    vals = np.empty((n_chunk, N_STATS))
    bucket = 0
    for k in range(n_steps):
        m = fcoef * mu
        x = e1 * x + e2 * m
        mu = a_mu * mu + b_mu * noise[:, k]
        m = fcoef * mu
        xd = -gamma * x + m
        vals[:, 0] = np.abs(x)
        vals[:, 1] = np.abs(xd)
        vals[:, 2] = x * x
        vals[:, 3] = xd * xd
        vals[:, 4] = m * x
        vals[:, 5] = x * mu
        vals[:, 6] = (mu * x - 0.5 * ksig2 * x * x - 0.5 * lam * xd * xd) * dt
        acc += vals
        if k >= burn_steps:
            post += vals[:, :N_PATH_STATS]
        if (k + 1) % steps_per_bucket == 0:
            acc[:, :N_PATH_STATS] /= steps_per_bucket
            bucket_sum[bucket] += acc.sum(axis=0)
            bucket_sumsq[bucket] += (acc * acc).sum(axis=0)
            acc[:] = 0.0
            bucket += 1
    n_post = n_steps - burn_steps
    path_stats += post / n_post


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _sim_chunk_numba(
        noise, mu_init, x_init,
        a_mu, b_mu, fcoef, gamma, e1, e2, ksig2, lam, dt,
        steps_per_bucket, burn_steps,
        bucket_sum, bucket_sumsq, path_stats,
    ):  # pragma: no cover - exercised through run_chunk
        n_chunk, n_steps = noise.shape
        n_post = n_steps - burn_steps
        acc = np.zeros(N_STATS)
        for p in range(n_chunk):
            mu = mu_init[p]
            x = x_init[p]
            acc[:] = 0.0
            bucket = 0
            for k in range(n_steps):
                m = fcoef * mu
                x = e1 * x + e2 * m
                mu = a_mu * mu + b_mu * noise[p, k]
                m = fcoef * mu
                xd = -gamma * x + m
                v0 = abs(x)
                v1 = abs(xd)
                v2 = x * x
                v3 = xd * xd
                v4 = m * x
                v5 = x * mu
                v6 = (mu * x - 0.5 * ksig2 * v2 - 0.5 * lam * v3) * dt
                acc[0] += v0
                acc[1] += v1
                acc[2] += v2
                acc[3] += v3
                acc[4] += v4
                acc[5] += v5
                acc[6] += v6
                if k >= burn_steps:
                    path_stats[p, 0] += v0
                    path_stats[p, 1] += v1
                    path_stats[p, 2] += v2
                    path_stats[p, 3] += v3
                    path_stats[p, 4] += v4
                    path_stats[p, 5] += v5
                if (k + 1) % steps_per_bucket == 0:
                    for s in range(N_PATH_STATS):
                        acc[s] /= steps_per_bucket
                    for s in range(N_STATS):
                        bucket_sum[bucket, s] += acc[s]
                        bucket_sumsq[bucket, s] += acc[s] * acc[s]
                        acc[s] = 0.0
                    bucket += 1
            for s in range(N_PATH_STATS):
                path_stats[p, s] /= n_post


def run_chunk(
    noise, mu_init, x_init,
    a_mu, b_mu, fcoef, gamma, e1, e2, ksig2, lam, dt,
    steps_per_bucket, burn_steps,
    bucket_sum, bucket_sumsq, path_stats,
    backend: str,
):
    """Advance one chunk of paths, accumulating bucket and per-path statistics."""
    fn = _sim_chunk_numba if backend == "numba" else _sim_chunk_numpy
    fn(
        noise, mu_init, x_init,
        a_mu, b_mu, fcoef, gamma, e1, e2, ksig2, lam, dt,
        steps_per_bucket, burn_steps,
        bucket_sum, bucket_sumsq, path_stats,
    )
