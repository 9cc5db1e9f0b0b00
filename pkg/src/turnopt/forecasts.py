"""Ornstein-Uhlenbeck alpha-forecast models, 1D and multivariate.

The samplers use the exact transition kernel (not Euler), so forecast
discretization contributes no bias; callers own the random draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch
from .matrix_kernels import solve_sylvester


@dataclass(frozen=True)
class OUForecast1D:
    """Mean-reverting forecast d(mu) = -phi * mu dt + nu dW.

    phi: mean-reversion speed, 1/day; nu: diffusion coefficient, forecast
    units per sqrt(day); mu0: initial forecast level.
    """

    phi: float
    nu: float
    mu0: float = 0.0

    def __post_init__(self):
        if self.phi <= 0.0:
            raise ValueError(f"phi must be positive, got {self.phi}")
        if self.nu < 0.0:
            raise ValueError(f"nu must be nonnegative, got {self.nu}")

    @property
    def half_life(self) -> float:
        return math.log(2.0) / self.phi


@dataclass(frozen=True)
class OUForecastND:
    """Multivariate O-U forecast d(mu) = -Phi mu dt + L dW.

    Phi must have spectrum in the open right half-plane; L is the N x K
    diffusion loading (K defaults to N).
    """

    phi_matrix: np.ndarray
    diffusion_loading: np.ndarray
    mu0: np.ndarray = field(default=None)

    def __post_init__(self):
        phi = np.atleast_2d(np.asarray(self.phi_matrix, dtype=float))
        load = np.atleast_2d(np.asarray(self.diffusion_loading, dtype=float))
        if phi.shape[0] != phi.shape[1]:
            raise DimensionMismatch(f"phi_matrix must be square, got {phi.shape}")
        if load.shape[0] != phi.shape[0]:
            raise DimensionMismatch(
                f"loading rows {load.shape[0]} != forecast dim {phi.shape[0]}"
            )
        if not np.all(np.linalg.eigvals(phi).real > 0.0):
            raise ValueError("phi_matrix spectrum must be in the open right half-plane")
        mu0 = self.mu0
        mu0 = np.zeros(phi.shape[0]) if mu0 is None else np.asarray(mu0, dtype=float)
        if mu0.shape != (phi.shape[0],):
            raise DimensionMismatch(f"mu0 shape {mu0.shape} != ({phi.shape[0]},)")
        object.__setattr__(self, "phi_matrix", phi)
        object.__setattr__(self, "diffusion_loading", load)
        object.__setattr__(self, "mu0", mu0)

    @property
    def dim(self) -> int:
        return self.phi_matrix.shape[0]


@dataclass(frozen=True)
class DecayForcing:
    """Abstract forcing with conditional decay rate theta and steady-state variance c0."""

    theta: float
    c0: float

    def __post_init__(self):
        if self.theta <= 0.0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if self.c0 < 0.0:
            raise ValueError(f"c0 must be nonnegative, got {self.c0}")


def conditional_mean(model, mu_t, horizon: float):
    """E[mu at t + horizon | mu_t]: exponential decay of the current level."""
    if horizon < 0.0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    if isinstance(model, OUForecast1D):
        return math.exp(-model.phi * horizon) * mu_t
    mu_t = np.asarray(mu_t, dtype=float)
    if mu_t.shape[-1] != model.dim:
        raise DimensionMismatch(f"mu_t shape {mu_t.shape} != dim {model.dim}")
    return scipy.linalg.expm(-model.phi_matrix * horizon) @ mu_t


def sample_step(model: OUForecast1D, mu_t: float, dt: float, noise: float) -> float:
    """Exact-in-distribution one-step transition of the 1D forecast."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    decay = math.exp(-model.phi * dt)
    sd = math.sqrt(model.nu**2 * (1.0 - decay * decay) / (2.0 * model.phi))
    return decay * mu_t + sd * noise


def stationary_variance(model):
    """Stationary variance: nu^2/(2 phi), or the Lyapunov solution Phi V + V Phi' = L L'."""
    if isinstance(model, OUForecast1D):
        return model.nu**2 / (2.0 * model.phi)
    load = model.diffusion_loading
    rhs = load @ load.T
    if not rhs.any():
        return np.zeros_like(rhs)
    v = solve_sylvester(model.phi_matrix, model.phi_matrix.T, rhs)
    return 0.5 * (v + v.T)


def transition_1d(model: OUForecast1D, dt: float) -> tuple[float, float]:
    """(decay, noise scale) of the exact one-step transition at step dt."""
    decay = math.exp(-model.phi * dt)
    sd = math.sqrt(model.nu**2 * (1.0 - decay * decay) / (2.0 * model.phi))
    return decay, sd


def transition_nd(model: OUForecastND, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """(decay matrix, noise loading) of the exact multivariate transition.

    The noise loading B satisfies B B' = V_inf - A V_inf A' with A = expm(-Phi dt),
    built from the clipped symmetric eigendecomposition so rank-deficient
    diffusion is handled.
    """
    a = scipy.linalg.expm(-model.phi_matrix * dt)
    v_inf = stationary_variance(model)
    cov = v_inf - a @ v_inf @ a.T
    cov = 0.5 * (cov + cov.T)
    w, vec = np.linalg.eigh(cov)
    w = np.clip(w, 0.0, None)
    return a, vec * np.sqrt(w)
