"""Command-line front end: parse config, dispatch experiments, serialize reports.

Usage: ``turnopt <mode> --config <path> [--output <path>] [--seed <u64>]``
with modes steady-state, simulate, oracle-check, paper-example, sweep.
Config files are strict-schema YAML; unknown keys are rejected with their
dotted path.  Exit codes: 0 success, 2 config error, 3 check-threshold breach.

The published worked example uses kappa = 1e-6, sigma = 0.01/day,
phi = 0.2/day, and an impact of 10 bps per 1% of $10M ADV, which
:func:`impact_from_bps_per_pct_adv` converts to lam = 1e-8 (back-solved so
that gamma = 0.1/day).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ConfigError, InvalidConfig, TurnoptError
from .forecasts import OUForecast1D
from .oracle import integrate_feedback, ou_problem, solve_discrete
from .reports import render_report, write_report
from .simulator import SimConfig, estimate_ir, estimate_turnover, simulate
from .strategy import MarketParams, closed_loop_moments, solve_feedback, steady_state

MODES = ("steady-state", "simulate", "oracle-check", "paper-example", "sweep")

_SCHEMA = {
    "market": {"kappa", "lam", "sigma2"},
    "forecast": {"phi", "nu", "mu0"},
    "sim": {
        "dt", "horizon", "burn_in", "n_paths", "seed", "x0",
        "bucket_dt", "stationary_start", "mu0",
    },
    "oracle": {"dt", "horizon", "mu0", "x0", "tolerance", "compare_fraction"},
    "sweep": {"parameter", "values"},
    "output": {"path", "format"},
}

_REQUIRED = {
    "steady-state": ("market", "forecast"),
    "simulate": ("market", "forecast", "sim"),
    "oracle-check": ("market", "forecast", "oracle"),
    "paper-example": (),
    "sweep": ("market", "forecast", "sweep"),
}

_PAPER_EXAMPLE = {
    "market": {"kappa": 1e-6, "lam": 1e-8, "sigma2": 1e-4},
    "forecast": {"phi": 0.2, "nu": 0.1},
    "sim": {
        "dt": 0.004, "horizon": 300.0, "burn_in": 100.0,
        "n_paths": 2000, "seed": 20240,
    },
    "oracle": {"dt": 1e-3, "horizon": 100.0, "mu0": 1e-4, "tolerance": 0.01},
}


def impact_from_bps_per_pct_adv(bps: float, adv: float) -> float:
    """Linear impact coefficient from a 'bps per 1% of ADV' quote.

    Trading at a rate of 1% of ADV per day moves the return by ``bps`` basis
    points, so lam = bps * 1e-4 / (0.01 * adv).  With 10 bps per 1% of a $10M
    ADV this gives 1e-8 currency*day/currency^2.
    """
    return bps * 1e-4 / (0.01 * adv)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description: mode plus the normalized config tree."""

    mode: str
    data: dict

    def section(self, name: str) -> dict:
        return self.data.get(name, {})


def _check_keys(data: dict, mode: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    for section, content in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown key: {section}")
        if not isinstance(content, dict):
            raise ConfigError(f"section {section} must be a mapping")
        for key in content:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key: {section}.{key}")
    for section in _REQUIRED[mode]:
        if section not in data:
            raise ConfigError(f"mode {mode} requires section: {section}")


def load_config(mode: str, path=None, seed=None, output=None) -> ExperimentConfig:
    if mode not in MODES:
        raise ConfigError(f"unknown mode: {mode}")
    data = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if mode == "paper-example":
        merged = {k: dict(v) for k, v in _PAPER_EXAMPLE.items()}
        for section, content in (data or {}).items():
            merged.setdefault(section, {}).update(content or {})
        data = merged
    _check_keys(data, mode)
    if seed is not None:
        data.setdefault("sim", {})["seed"] = int(seed)
    if output is not None:
        data.setdefault("output", {})["path"] = output
    fmt = data.get("output", {}).get("format", "csv")
    if fmt != "csv":
        raise ConfigError(f"output.format must be 'csv', got {fmt!r}")
    return ExperimentConfig(mode, data)


def _market(config: ExperimentConfig) -> MarketParams:
    sec = config.section("market")
    try:
        return MarketParams(
            kappa=float(sec["kappa"]), lam=sec["lam"], sigma2=sec["sigma2"]
        )
    except KeyError as exc:
        raise ConfigError(f"market.{exc.args[0]} is required") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad market parameters: {exc}") from exc


def _forecast(config: ExperimentConfig) -> OUForecast1D:
    sec = config.section("forecast")
    try:
        return OUForecast1D(
            phi=float(sec["phi"]),
            nu=float(sec.get("nu", 0.0)),
            mu0=float(sec.get("mu0", 0.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"forecast.{exc.args[0]} is required") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad forecast parameters: {exc}") from exc


def _sim_config(config: ExperimentConfig) -> SimConfig:
    sec = config.section("sim")
    try:
        return SimConfig(
            dt=float(sec["dt"]),
            horizon=float(sec["horizon"]),
            burn_in=float(sec["burn_in"]),
            n_paths=int(sec["n_paths"]),
            seed=int(sec["seed"]),
            x0=float(sec.get("x0", 0.0)),
            bucket_dt=float(sec.get("bucket_dt", 1.0)),
            stationary_start=bool(sec.get("stationary_start", True)),
            mu0=(None if sec.get("mu0") is None else float(sec["mu0"])),
        )
    except KeyError as exc:
        raise ConfigError(f"sim.{exc.args[0]} is required") from exc
    except InvalidConfig as exc:
        raise ConfigError(str(exc)) from exc


def _steady_summary(params, forecast) -> dict:
    report = steady_state(params, forecast)
    loop = closed_loop_moments(params, forecast)
    out = {
        "gamma": report.gamma,
        "theta": report.theta,
        "turnover_closed_form": report.turnover,
        "turnover_process_form": loop.turnover,
        "h_bar": report.h_bar,
        "g_bar": report.g_bar,
        "v_bar": report.v_bar,
        "pnl_rate_gross": report.pnl_rate_gross,
        "pnl_rate_net": report.pnl_rate_net,
        "ir_closed_form": report.ir if report.ir is not None else "undefined",
        "moments_defined": report.moments_defined,
    }
    return out


def _run_simulate(config: ExperimentConfig) -> tuple[dict, object, int]:
    params = _market(config)
    forecast = _forecast(config)
    law = solve_feedback(params, forecast)
    sim_config = _sim_config(config)
    ensemble = simulate(params, forecast, law, sim_config)
    summary = _steady_summary(params, forecast)
    turnover = estimate_turnover(ensemble)
    summary["turnover_estimate"] = turnover.value
    summary["turnover_se"] = turnover.se
    if forecast.nu > 0.0:
        ir = estimate_ir(ensemble, params, forecast)
        summary["ir_estimate"] = ir.value
        summary["ir_se"] = ir.se
    summary["backend"] = ensemble.backend
    return summary, ensemble, 0


def _run_oracle_check(config: ExperimentConfig) -> tuple[dict, object, int]:
    params = _market(config)
    sec = config.section("oracle")
    forecast = OUForecast1D(
        phi=_forecast(config).phi,
        nu=_forecast(config).nu,
        mu0=float(sec.get("mu0", _forecast(config).mu0)),
    )
    law = solve_feedback(params, forecast)
    problem = ou_problem(
        params, forecast, float(sec["horizon"]), float(sec["dt"]),
        x0=float(sec.get("x0", 0.0)),
    )
    solution = solve_discrete(problem)
    reference = integrate_feedback(problem, law)
    frac = float(sec.get("compare_fraction", 0.5))
    cut = max(2, int(frac * problem.n_points))
    window = slice(0, cut)
    scale = float(np.max(np.abs(reference[window])))
    discrepancy = float(np.max(np.abs(solution.x_path[window] - reference[window])))
    rel = discrepancy / scale if scale > 0.0 else discrepancy
    tolerance = float(sec.get("tolerance", 0.01))
    summary = {
        "gamma": law.gamma,
        "kkt_residual": solution.kkt_residual,
        "objective_value": solution.objective_value,
        "max_abs_discrepancy": discrepancy,
        "max_rel_discrepancy": rel,
        "tolerance": tolerance,
        "within_tolerance": rel <= tolerance,
    }
    return summary, None, (0 if rel <= tolerance else 3)


def _run_sweep(config: ExperimentConfig) -> tuple[dict, object, int, list[str]]:
    sec = config.section("sweep")
    try:
        parameter = sec["parameter"]
        values = sec["values"]
    except KeyError as exc:
        raise ConfigError(f"sweep.{exc.args[0]} is required") from exc
    if parameter not in ("phi", "nu", "kappa", "lam", "sigma2"):
        raise ConfigError(f"sweep.parameter must name a market/forecast scalar, got {parameter!r}")
    rows = ["parameter,value,gamma,turnover,ir"]
    for value in values:
        market = dict(config.section("market"))
        fc = dict(config.section("forecast"))
        if parameter in ("phi", "nu"):
            fc[parameter] = float(value)
        else:
            market[parameter] = float(value)
        sub = ExperimentConfig(config.mode, {"market": market, "forecast": fc})
        params = _market(sub)
        forecast = _forecast(sub)
        report = steady_state(params, forecast)
        ir = report.ir if report.ir is not None else float("nan")
        rows.append(
            f"{parameter},{repr(float(value))},{repr(report.gamma)},"
            f"{repr(report.turnover)},{repr(ir)}"
        )
    summary = {"sweep_parameter": parameter, "n_values": len(values)}
    return summary, None, 0, rows


def run(config: ExperimentConfig) -> int:
    """Execute the experiment; prints the summary and writes artifacts."""
    extra_rows = None
    if config.mode == "steady-state":
        summary = _steady_summary(_market(config), _forecast(config))
        ensemble, code = None, 0
    elif config.mode == "simulate":
        summary, ensemble, code = _run_simulate(config)
    elif config.mode == "oracle-check":
        summary, ensemble, code = _run_oracle_check(config)
    elif config.mode == "sweep":
        summary, ensemble, code, extra_rows = _run_sweep(config)
    elif config.mode == "paper-example":
        summary = _steady_summary(_market(config), _forecast(config))
        sim_summary, ensemble, _ = _run_simulate(config)
        oracle_summary, _, code = _run_oracle_check(config)
        summary["turnover_estimate"] = sim_summary["turnover_estimate"]
        summary["turnover_se"] = sim_summary["turnover_se"]
        summary["ir_estimate"] = sim_summary.get("ir_estimate", "undefined")
        summary["ir_se"] = sim_summary.get("ir_se", "undefined")
        summary["oracle_max_rel_discrepancy"] = oracle_summary["max_rel_discrepancy"]
        summary["backend"] = sim_summary["backend"]
        code = 0
    else:  # pragma: no cover - guarded by load_config
        raise ConfigError(f"unknown mode: {config.mode}")

    config_dict = {"mode": config.mode, **config.data}
    text = render_report(summary, config_dict, ensemble)
    if extra_rows is not None:
        text += "\n".join(extra_rows) + "\n"
    sys.stdout.write(text)
    out_path = config.section("output").get("path")
    if out_path:
        if extra_rows is not None:
            with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            write_report(summary, config_dict, out_path, ensemble)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="turnopt",
        description="Optimal-turnover strategy toolkit: closed forms, Monte Carlo, "
        "and variational verification.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", help="YAML experiment config")
    parser.add_argument("--output", help="report file path (overrides output.path)")
    parser.add_argument("--seed", type=int, help="override sim.seed")
    args = parser.parse_args(argv)
    if args.config is None and args.mode != "paper-example":
        print(f"error: mode {args.mode} requires --config", file=sys.stderr)
        return 2
    try:
        config = load_config(args.mode, args.config, seed=args.seed, output=args.output)
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TurnoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
