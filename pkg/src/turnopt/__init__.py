"""Closed-form optimal trading under linear price impact.

Solves the linear-quadratic feedback law dx/dt = -Gamma x + b(mu), evaluates
the single-asset steady-state turnover / information-ratio closed forms, and
verifies them with an exact-kernel Monte Carlo engine and a discretized
convex-optimization oracle.
"""

from .errors import (
    ConfigError,
    DegenerateForecast,
    DimensionMismatch,
    InsufficientData,
    InvalidConfig,
    IOFailure,
    NotPositiveDefinite,
    NotSymmetric,
    SingularSystem,
    TurnoptError,
)
from .forecasts import (
    DecayForcing,
    OUForecast1D,
    OUForecastND,
    conditional_mean,
    sample_step,
    stationary_variance,
)
from .matrix_kernels import SymmetricPDMatrix, pd_sqrt, rate_matrix, solve_sylvester, validate_pd
from .oracle import (
    DiscreteProblem,
    OracleSolution,
    evaluate_objective,
    integrate_feedback,
    ou_problem,
    perturbation_check,
    solve_discrete,
)
from .simulator import (
    Estimate,
    SimConfig,
    SimEnsemble,
    estimate_ir,
    estimate_turnover,
    simulate,
)
from .strategy import (
    FeedbackLaw,
    MarketParams,
    SteadyStateReport,
    aim_portfolio,
    closed_loop_moments,
    drift,
    portfolio_ir,
    solve_feedback,
    steady_state,
    steady_state_from_decay,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
