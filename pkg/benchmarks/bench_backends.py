"""Benchmark the numba kernel against the pure-numpy fallback.

Runs the same ensemble through both backends (selected via TURNOPT_BACKEND),
reports wall time per backend and the worst relative disagreement between
their per-bucket means.  The first numba call includes JIT compilation, so a
warm-up run is timed out separately.

Usage: python benchmarks/bench_backends.py [--paths N] [--dt DT] [--horizon T]
"""

import argparse
import os
import time

import numpy as np

from turnopt import (
    MarketParams,
    OUForecast1D,
    SimConfig,
    simulate,
    solve_feedback,
)
from turnopt import kernels


def run_backend(backend, params, forecast, law, config):
    os.environ["TURNOPT_BACKEND"] = backend
    start = time.perf_counter()
    ensemble = simulate(params, forecast, law, config)
    return ensemble, time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=2000)
    parser.add_argument("--dt", type=float, default=0.004)
    parser.add_argument("--horizon", type=float, default=300.0)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    params = MarketParams(kappa=1e-6, lam=1e-8, sigma2=1e-4)
    forecast = OUForecast1D(phi=0.2, nu=0.1)
    law = solve_feedback(params, forecast)
    config = SimConfig(
        dt=args.dt, horizon=args.horizon, burn_in=args.horizon / 3,
        n_paths=args.paths, seed=args.seed,
    )
    steps = config.n_steps * config.n_paths
    print(f"{config.n_paths} paths x {config.n_steps} steps = {steps:.2e} path-steps")

    if not kernels.HAVE_NUMBA:
        print("numba not installed; benchmarking the numpy backend only")
        _, elapsed = run_backend("numpy", params, forecast, law, config)
        print(f"numpy : {elapsed:8.3f} s  ({steps / elapsed:.2e} path-steps/s)")
        return

    # warm-up compiles the jitted kernel so the timed run measures execution
    warm = SimConfig(dt=args.dt, horizon=args.horizon, burn_in=args.horizon / 3,
                     n_paths=2, seed=args.seed)
    run_backend("numba", params, forecast, law, warm)

    results = {}
    for backend in ("numba", "numpy"):
        ensemble, elapsed = run_backend(backend, params, forecast, law, config)
        results[backend] = ensemble
        print(f"{backend:6s}: {elapsed:8.3f} s  ({steps / elapsed:.2e} path-steps/s)")

    a, b = results["numba"].means, results["numpy"].means
    scale = np.maximum(np.abs(a), np.abs(b))
    rel = np.max(np.abs(a - b) / np.where(scale > 0.0, scale, 1.0))
    print(f"max relative disagreement between backends: {rel:.3e}")


if __name__ == "__main__":
    main()
