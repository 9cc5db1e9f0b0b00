"""Optimal feedback law under quadratic impact and its steady-state closed forms.

The optimal position follows dx/dt = -Gamma x + b(mu) with
Gamma = sqrt(kappa inv(Lambda) Omega) and, for O-U forecasts, a static linear
forcing map b = X mu obtained from a Sylvester solve (scalar: m = mu / (lam (gamma + phi))).

Steady-state moments are derived from the generic lemma for a forcing that
decays at rate theta with steady-state variance c0:

    h_bar = c0 / (theta + gamma),  g_bar = h_bar / gamma,
    v_bar = theta * h_bar,         turnover = sqrt(theta * gamma).

``steady_state`` applies the lemma with the published convention
theta = gamma + phi.  Note that the O-U forcing m = mu / (lam (gamma + phi))
actually decays at rate phi (only the kernel inside its defining integral
decays at gamma + phi), so a long simulation converges to the theta = phi
values instead; those are exposed as :func:`closed_loop_moments` and used to
validate the Monte Carlo engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DegenerateForecast, DimensionMismatch
from .forecasts import DecayForcing, OUForecast1D, OUForecastND, stationary_variance
from .matrix_kernels import SymmetricPDMatrix, rate_matrix, solve_sylvester, validate_pd

Scalarish = Union[float, np.ndarray, SymmetricPDMatrix]


def _validated(value, name: str) -> Union[float, SymmetricPDMatrix]:
    if isinstance(value, SymmetricPDMatrix):
        return value
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        v = float(arr)
        if v <= 0.0:
            raise ValueError(f"{name} must be positive, got {v}")
        return v
    return validate_pd(arr)


@dataclass(frozen=True)
class MarketParams:
    """Risk aversion kappa (1/currency), impact lam, and return covariance sigma2.

    lam and sigma2 are positive scalars or validated PD matrices; all rates are
    per day and positions in currency units, so lam carries currency * day per
    currency^2 traded and sigma2 is a daily return variance.
    """

    kappa: float
    lam: Scalarish
    sigma2: Scalarish

    def __post_init__(self):
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        lam = _validated(self.lam, "lam")
        sigma2 = _validated(self.sigma2, "sigma2")
        scalar = isinstance(lam, float)
        if scalar != isinstance(sigma2, float):
            raise DimensionMismatch("lam and sigma2 must both be scalar or both matrices")
        if not scalar and lam.dim != sigma2.dim:
            raise DimensionMismatch(f"lam dim {lam.dim} != sigma2 dim {sigma2.dim}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def is_scalar(self) -> bool:
        return isinstance(self.lam, float)

    @property
    def dim(self) -> int:
        return 1 if self.is_scalar else self.lam.dim


@dataclass(frozen=True)
class FeedbackLaw:
    """Solved strategy: position decays at rate gamma toward the forcing-driven aim.

    gamma is a scalar or a stable rate matrix; forcing maps the current
    forecast mu to the ODE forcing b (scalar coefficient 1/(lam (gamma+phi))).
    """

    gamma: Union[float, np.ndarray]
    forcing: Union[float, np.ndarray]

    @property
    def is_scalar(self) -> bool:
        return np.ndim(self.gamma) == 0

    @property
    def dim(self) -> int:
        return 1 if self.is_scalar else self.gamma.shape[0]


@dataclass(frozen=True)
class SteadyStateReport:
    """Closed-form steady-state quantities for the 1D law.

    Moment fields (h_bar, g_bar, v_bar, pnl rates, ir) are all zero/None when
    the forecast is noiseless; turnover is noise-independent and always set.
    """

    gamma: float
    phi: float
    theta: float
    c0: float
    h_bar: float
    g_bar: float
    v_bar: float
    turnover: float
    pnl_rate_gross: float
    pnl_rate_net: float
    ir: Optional[float]
    moments_defined: bool

    def require_ir(self) -> float:
        if self.ir is None:
            raise DegenerateForecast("information ratio undefined for a noiseless forecast")
        return self.ir


def solve_feedback(params: MarketParams, forecast) -> FeedbackLaw:
    """Build the optimal feedback law for the given market and O-U forecast."""
    if params.is_scalar:
        if not isinstance(forecast, OUForecast1D):
            raise DimensionMismatch("scalar market parameters require a 1D forecast")
        gamma = math.sqrt(params.kappa * params.sigma2 / params.lam)
        forcing = 1.0 / (params.lam * (gamma + forecast.phi))
        return FeedbackLaw(gamma, forcing)
    if not isinstance(forecast, OUForecastND) or forecast.dim != params.dim:
        raise DimensionMismatch("market and forecast dimensions disagree")
    gamma = rate_matrix(params.kappa, params.lam, params.sigma2)
    lam_inv = params.lam.inv().values
    forcing = solve_sylvester(gamma, forecast.phi_matrix, lam_inv)
    return FeedbackLaw(gamma, forcing)


def drift(law: FeedbackLaw, x, mu):
    """Optimal trading rate -gamma x + forcing(mu)."""
    if law.is_scalar:
        return -law.gamma * x + law.forcing * mu
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if x.shape != (law.dim,) or mu.shape != (law.dim,):
        raise DimensionMismatch(f"expected vectors of length {law.dim}")
    return -law.gamma @ x + law.forcing @ mu


def aim_portfolio(law: FeedbackLaw, mu):
    """Position at which the optimal drift vanishes: inv(gamma) forcing(mu)."""
    if law.is_scalar:
        return law.forcing * mu / law.gamma
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (law.dim,):
        raise DimensionMismatch(f"expected forecast vector of length {law.dim}")
    return np.linalg.solve(law.gamma, law.forcing @ mu)


def steady_state_from_decay(
    params: MarketParams, forecast: OUForecast1D, forcing: DecayForcing
) -> SteadyStateReport:
    """Steady-state report for a forcing of decay rate theta and variance c0.

    Exact for any forcing a with E_t a_s = exp(-theta (s-t)) a_t and
    E a^2 = c0 driving dx/dt = -gamma x + a.
    """
    theta, c0 = forcing.theta, forcing.c0
    law = solve_feedback(params, forecast)
    gamma = law.gamma
    turnover = math.sqrt(theta * gamma)
    if c0 == 0.0:
        return SteadyStateReport(
            gamma, forecast.phi, theta, 0.0, 0.0, 0.0, 0.0, turnover, 0.0, 0.0, None, False
        )
    h_bar = c0 / (theta + gamma)
    g_bar = h_bar / gamma
    v_bar = theta * h_bar
    # E[x mu] = lam (gamma + phi) E[x m] holds exactly for the O-U forcing map.
    pnl_gross = params.lam * (gamma + forecast.phi) * h_bar
    pnl_net = pnl_gross - 0.5 * params.lam * v_bar
    sigma = math.sqrt(params.sigma2)
    ir = pnl_net / (sigma * math.sqrt(g_bar))
    return SteadyStateReport(
        gamma, forecast.phi, theta, c0, h_bar, g_bar, v_bar, turnover,
        pnl_gross, pnl_net, ir, True,
    )


def forcing_variance(params: MarketParams, forecast: OUForecast1D) -> float:
    """Steady-state variance of m = mu / (lam (gamma + phi))."""
    law = solve_feedback(params, forecast)
    return law.forcing**2 * stationary_variance(forecast)


def steady_state(params: MarketParams, forecast: OUForecast1D) -> SteadyStateReport:
    """Published closed forms: forcing decay taken as theta = gamma + phi.

    With this convention the information ratio reduces to
    (nu / (2 sigma)) * sqrt(gamma / (2 phi (phi + 2 gamma))) and turnover to
    gamma * sqrt(phi / gamma + 1).  See the module docstring: the simulated
    dynamics converge to :func:`closed_loop_moments` instead.
    """
    if not params.is_scalar:
        raise DimensionMismatch("steady-state closed forms are 1D only")
    law = solve_feedback(params, forecast)
    forcing = DecayForcing(law.gamma + forecast.phi, forcing_variance(params, forecast))
    return steady_state_from_decay(params, forecast, forcing)


def closed_loop_moments(params: MarketParams, forecast: OUForecast1D) -> SteadyStateReport:
    """Steady-state moments of the actual closed-loop dynamics (forcing decay phi).

    These are the values the Monte Carlo estimators converge to; derived from
    the stationary autocovariance of x driven by the O-U forcing.
    """
    if not params.is_scalar:
        raise DimensionMismatch("steady-state closed forms are 1D only")
    return steady_state_from_decay(
        params, forecast, DecayForcing(forecast.phi, forcing_variance(params, forecast))
    )


def portfolio_ir(ir_single: float, n_assets: int) -> float:
    """Scale a single-asset IR to N statistically independent assets: ir * sqrt(N)."""
    if n_assets < 1:
        raise ValueError(f"n_assets must be >= 1, got {n_assets}")
    return ir_single * math.sqrt(n_assets)
