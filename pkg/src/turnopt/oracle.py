"""Independent optimality certification via a discretized convex program.

The continuous objective

    integral of [ mu . x - (kappa/2) x . Omega x - (1/2) xdot . Lambda xdot ] dt

is discretized on a uniform grid with a deterministic forecast path
(trapezoid on the state terms, forward differences for xdot).  The objective
is strictly concave, so the tridiagonal (block-tridiagonal in N dimensions)
first-order-condition system has a unique solution, which is compared against
the feedback law's trajectory.  The terminal node carries the natural
free-endpoint condition; comparisons against the infinite-horizon law are
restricted to the early part of the grid where the endpoint effect is
negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import DimensionMismatch, SingularSystem
from .forecasts import OUForecast1D, OUForecastND
from .strategy import FeedbackLaw, MarketParams


@dataclass(frozen=True)
class DiscreteProblem:
    """Uniform grid of M+1 points, a deterministic forecast path, and market data."""

    dt: float
    mu_path: np.ndarray  # (M+1,) scalar or (M+1, N)
    params: MarketParams
    x0: Union[float, np.ndarray]

    def __post_init__(self):
        mu = np.asarray(self.mu_path, dtype=float)
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if mu.shape[0] < 3:
            raise ValueError("grid needs at least 3 points")
        if not np.all(np.isfinite(mu)):
            raise ValueError("mu_path must be finite")
        if self.params.is_scalar and mu.ndim != 1:
            raise DimensionMismatch("scalar problem requires a 1D mu_path")
        if not self.params.is_scalar and mu.shape[1:] != (self.params.dim,):
            raise DimensionMismatch(
                f"mu_path shape {mu.shape} incompatible with dim {self.params.dim}"
            )
        object.__setattr__(self, "mu_path", mu)

    @property
    def n_points(self) -> int:
        return self.mu_path.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dt


@dataclass(frozen=True)
class OracleSolution:
    x_path: np.ndarray
    objective_value: float
    kkt_residual: float


def ou_problem(
    params: MarketParams, forecast, horizon: float, dt: float, x0=0.0
) -> DiscreteProblem:
    """Problem with the conditional-expectation forecast path exp(-phi t) mu0."""
    m = round(horizon / dt)
    t = np.arange(m + 1) * dt
    if isinstance(forecast, OUForecast1D):
        mu = np.exp(-forecast.phi * t) * forecast.mu0
    elif isinstance(forecast, OUForecastND):
        decay = scipy.linalg.expm(-forecast.phi_matrix * dt)
        mu = np.empty((m + 1, forecast.dim))
        mu[0] = forecast.mu0
        for k in range(m):
            mu[k + 1] = decay @ mu[k]
    else:
        raise TypeError(f"unsupported forecast type {type(forecast)!r}")
    return DiscreteProblem(dt, mu, params, x0)


def _block_tridiagonal(diag, lower, upper) -> scipy.sparse.csr_matrix:
    """Assemble a block-tridiagonal sparse matrix from (m, n, n) dense blocks.

    ``lower[i]`` sits at block row i+1, column i; ``upper[i]`` at block row i,
    column i+1.
    """
    m, n, _ = diag.shape

    def entries(blocks, row0, col0):
        nb = blocks.shape[0]
        rows = (np.arange(nb)[:, None, None] + row0) * n + np.arange(n)[None, :, None]
        cols = (np.arange(nb)[:, None, None] + col0) * n + np.arange(n)[None, None, :]
        rows = np.broadcast_to(rows, blocks.shape)
        cols = np.broadcast_to(cols, blocks.shape)
        return rows.ravel(), cols.ravel(), blocks.ravel()

    parts = [entries(diag, 0, 0), entries(lower, 1, 0), entries(upper, 0, 1)]
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    data = np.concatenate([p[2] for p in parts])
    return scipy.sparse.coo_matrix((data, (rows, cols)), shape=(m * n, m * n)).tocsr()


def _gradient(x: np.ndarray, problem: DiscreteProblem) -> np.ndarray:
    """Gradient of the discrete objective w.r.t. the path (row 0 included)."""
    dt = problem.dt
    mu = problem.mu_path
    p = problem.params
    if p.is_scalar:
        ksig = p.kappa * p.sigma2
        state = mu - ksig * x
        lap = np.zeros_like(x)
        lap[1:-1] = (x[2:] - 2.0 * x[1:-1] + x[:-2]) * (p.lam / dt)
        g = dt * state + lap
        g[0] = 0.5 * dt * state[0] + (x[1] - x[0]) * (p.lam / dt)
        g[-1] = 0.5 * dt * state[-1] - (x[-1] - x[-2]) * (p.lam / dt)
        return g
    ksig = p.kappa * p.sigma2.values
    lam = p.lam.values
    state = mu - x @ ksig
    g = dt * state
    g[1:-1] += (x[2:] - 2.0 * x[1:-1] + x[:-2]) @ (lam / dt)
    g[0] = 0.5 * dt * state[0] + (x[1] - x[0]) @ (lam / dt)
    g[-1] = 0.5 * dt * state[-1] - (x[-1] - x[-2]) @ (lam / dt)
    return g


def solve_discrete(problem: DiscreteProblem) -> OracleSolution:
    """Direct solve of the first-order-condition system with x(0) pinned."""
    dt = problem.dt
    mu = problem.mu_path
    p = problem.params
    m1 = problem.n_points
    if p.is_scalar:
        ksig = p.kappa * p.sigma2
        w = p.lam / dt
        ab = np.zeros((3, m1))
        ab[0, 1:] = w  # superdiagonal
        ab[1, :] = -2.0 * w - dt * ksig  # diagonal
        ab[2, :-1] = w  # subdiagonal
        rhs = -dt * mu.astype(float).copy()
        # pinned initial node
        ab[1, 0] = 1.0
        ab[0, 1] = 0.0
        rhs[0] = float(problem.x0)
        # natural terminal node
        ab[1, -1] = -w - 0.5 * dt * ksig
        rhs[-1] = -0.5 * dt * mu[-1]
        try:
            x = scipy.linalg.solve_banded((1, 1), ab, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise SingularSystem(str(exc)) from exc
    else:
        n = p.dim
        ksig = p.kappa * p.sigma2.values
        w = p.lam.values / dt
        eye = np.eye(n)
        diag_blocks = np.empty((m1, n, n))
        diag_blocks[:] = -2.0 * w - dt * ksig
        diag_blocks[0] = eye
        diag_blocks[-1] = -w - 0.5 * dt * ksig
        lower = np.tile(w, (m1 - 1, 1, 1))
        upper = lower.copy()
        upper[0] = 0.0
        a = _block_tridiagonal(diag_blocks, lower, upper)
        rhs = (-dt * mu).copy()
        x0 = np.asarray(problem.x0, dtype=float)
        rhs[0] = np.full(n, float(x0)) if x0.ndim == 0 else x0
        rhs[-1] = -0.5 * dt * mu[-1]
        sol = scipy.sparse.linalg.spsolve(a, rhs.ravel())
        if not np.all(np.isfinite(sol)):  # pragma: no cover
            raise SingularSystem("sparse solve returned non-finite values")
        x = sol.reshape(m1, n)
    grad = _gradient(x, problem)
    grad_free = grad[1:]
    scale = max(1.0, float(np.max(np.abs(problem.mu_path))) * dt, float(np.max(np.abs(x))))
    kkt = float(np.max(np.abs(grad_free))) / scale
    return OracleSolution(x, evaluate_objective(x, problem), kkt)


def evaluate_objective(x_path: np.ndarray, problem: DiscreteProblem) -> float:
    """Discrete objective: trapezoid on state terms, forward differences for xdot."""
    x = np.asarray(x_path, dtype=float)
    if x.shape != problem.mu_path.shape:
        raise DimensionMismatch(
            f"x_path shape {x.shape} != mu_path shape {problem.mu_path.shape}"
        )
    dt = problem.dt
    p = problem.params
    mu = problem.mu_path
    if p.is_scalar:
        f = mu * x - 0.5 * p.kappa * p.sigma2 * x * x
        dx = np.diff(x)
        kinetic = 0.5 * p.lam * np.sum(dx * dx) / dt
    else:
        f = np.einsum("ij,ij->i", mu, x) - 0.5 * np.einsum(
            "ij,ij->i", x @ (p.kappa * p.sigma2.values), x
        )
        dx = np.diff(x, axis=0)
        kinetic = 0.5 * np.sum(np.einsum("ij,ij->i", dx @ p.lam.values, dx)) / dt
    state = dt * (0.5 * f[0] + f[1:-1].sum() + 0.5 * f[-1])
    return float(state - kinetic)


def perturbation_check(
    solution: OracleSolution,
    problem: DiscreteProblem,
    n_perturbations: int = 100,
    magnitude: float = 1e-3,
    seed: int = 0,
) -> float:
    """Max objective gain over random interior perturbations (must be <= 0).

    ``magnitude`` scales each unit-normalized perturbation; the initial node
    is held fixed.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    base = solution.objective_value
    best = -math.inf
    for _ in range(n_perturbations):
        delta = rng.standard_normal(solution.x_path.shape)
        if problem.params.is_scalar:
            delta[0] = 0.0
        else:
            delta[0, :] = 0.0
        norm = np.linalg.norm(delta)
        if norm > 0.0:
            delta *= magnitude / norm
        gain = evaluate_objective(solution.x_path + delta, problem) - base
        best = max(best, gain)
    return best


def integrate_feedback(problem: DiscreteProblem, law: FeedbackLaw) -> np.ndarray:
    """Feedback trajectory on the problem grid via the exponential integrator.

    Forcing held piecewise-constant at the left grid node, matching the Monte
    Carlo engine's stepping scheme.
    """
    dt = problem.dt
    mu = problem.mu_path
    if law.is_scalar:
        e1 = math.exp(-law.gamma * dt)
        e2 = (1.0 - e1) / law.gamma
        x = np.empty(problem.n_points)
        x[0] = float(problem.x0)
        m = law.forcing * mu
        for k in range(problem.n_points - 1):
            x[k + 1] = e1 * x[k] + e2 * m[k]
        return x
    n = law.dim
    e1 = scipy.linalg.expm(-law.gamma * dt)
    e2 = np.linalg.solve(law.gamma, np.eye(n) - e1)
    x = np.empty((problem.n_points, n))
    x0 = np.asarray(problem.x0, dtype=float)
    x[0] = np.full(n, float(x0)) if x0.ndim == 0 else x0
    m = mu @ law.forcing.T
    for k in range(problem.n_points - 1):
        x[k + 1] = e1 @ x[k] + e2 @ m[k]
    return x
