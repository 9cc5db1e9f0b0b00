import math

import numpy as np
import pytest
import yaml

from turnopt import MarketParams, OUForecast1D, SimConfig, simulate, solve_feedback
from turnopt.cli import impact_from_bps_per_pct_adv, load_config, main
from turnopt.errors import ConfigError
from turnopt.reports import CSV_HEADER, parse_config_echo, render_report


def write_yaml(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


SIM_CONFIG = {
    "market": {"kappa": 1e-6, "lam": 1e-8, "sigma2": 1e-4},
    "forecast": {"phi": 0.2, "nu": 0.1},
    "sim": {"dt": 0.02, "horizon": 40.0, "burn_in": 10.0, "n_paths": 50, "seed": 5},
}


class TestConfigValidation:
    def test_unknown_section(self, tmp_path, capsys):
        path = write_yaml(tmp_path, "c.yaml", {**SIM_CONFIG, "martket": {}})
        assert main(["simulate", "--config", path]) == 2
        assert "martket" in capsys.readouterr().err

    def test_misspelled_key_named_in_error(self, tmp_path, capsys):
        bad = {**SIM_CONFIG, "forecast": {"phi": 0.2, "nuu": 0.1}}
        path = write_yaml(tmp_path, "c.yaml", bad)
        assert main(["simulate", "--config", path]) == 2
        assert "forecast.nuu" in capsys.readouterr().err

    def test_missing_required_section(self, tmp_path, capsys):
        path = write_yaml(tmp_path, "c.yaml", {"market": SIM_CONFIG["market"]})
        assert main(["simulate", "--config", path]) == 2
        assert "forecast" in capsys.readouterr().err

    def test_missing_config_file(self, capsys):
        assert main(["simulate", "--config", "/nonexistent/c.yaml"]) == 2

    def test_config_required_except_paper_example(self, capsys):
        assert main(["simulate"]) == 2
        assert "requires --config" in capsys.readouterr().err

    def test_invalid_yaml(self, tmp_path, capsys):
        path = tmp_path / "c.yaml"
        path.write_text("market: [unclosed", encoding="utf-8")
        assert main(["simulate", "--config", str(path)]) == 2

    def test_bad_output_format(self, tmp_path):
        cfg = {**SIM_CONFIG, "output": {"format": "json"}}
        path = write_yaml(tmp_path, "c.yaml", cfg)
        with pytest.raises(ConfigError, match="format"):
            load_config("simulate", path)

    def test_bad_sim_values(self, tmp_path, capsys):
        cfg = dict(SIM_CONFIG)
        cfg["sim"] = {**SIM_CONFIG["sim"], "n_paths": 0}
        path = write_yaml(tmp_path, "c.yaml", cfg)
        assert main(["simulate", "--config", path]) == 2


class TestSteadyStateMode:
    def test_summary_values(self, tmp_path, capsys):
        cfg = {"market": SIM_CONFIG["market"], "forecast": SIM_CONFIG["forecast"]}
        path = write_yaml(tmp_path, "c.yaml", cfg)
        assert main(["steady-state", "--config", path]) == 0
        out = capsys.readouterr().out
        assert "gamma=0.1" in out
        summary = dict(
            line.split("=", 1) for line in out.splitlines()
            if "=" in line and not line.startswith("#")
        )
        assert float(summary["turnover_closed_form"]) == pytest.approx(
            math.sqrt(0.03), abs=1e-15
        )
        assert float(summary["turnover_process_form"]) == pytest.approx(
            math.sqrt(0.02), abs=1e-15
        )
        assert CSV_HEADER in out

    def test_config_echo_round_trip(self, tmp_path, capsys):
        cfg = {"market": SIM_CONFIG["market"], "forecast": SIM_CONFIG["forecast"]}
        path = write_yaml(tmp_path, "c.yaml", cfg)
        main(["steady-state", "--config", path])
        echoed = parse_config_echo(capsys.readouterr().out)
        assert echoed["mode"] == "steady-state"
        assert echoed["market"] == cfg["market"]
        assert echoed["forecast"] == cfg["forecast"]


class TestSimulateMode:
    def test_report_written_and_deterministic(self, tmp_path, capsys):
        out_path = tmp_path / "a.csv"
        cfg = {**SIM_CONFIG, "output": {"path": str(out_path)}}
        path = write_yaml(tmp_path, "c.yaml", cfg)
        assert main(["simulate", "--config", path]) == 0
        first = capsys.readouterr().out
        assert main(["simulate", "--config", path]) == 0
        second = capsys.readouterr().out
        assert first == second
        assert out_path.read_text(encoding="utf-8") == first
        assert CSV_HEADER in first
        assert len(first.splitlines()) > 40  # one row per bucket

    def test_seed_override_changes_output(self, tmp_path):
        path = write_yaml(tmp_path, "c.yaml", SIM_CONFIG)
        out1, out2 = str(tmp_path / "s1.csv"), str(tmp_path / "s2.csv")
        assert main(["simulate", "--config", path, "--output", out1, "--seed", "5"]) == 0
        assert main(["simulate", "--config", path, "--output", out2, "--seed", "6"]) == 0
        a = open(out1, encoding="utf-8").read()
        b = open(out2, encoding="utf-8").read()
        assert a != b


class TestOracleCheckMode:
    BASE = {
        "market": SIM_CONFIG["market"],
        "forecast": SIM_CONFIG["forecast"],
        "oracle": {"dt": 1e-3, "horizon": 100.0, "mu0": 1e-4, "tolerance": 0.01},
    }

    def test_within_tolerance(self, tmp_path, capsys):
        path = write_yaml(tmp_path, "c.yaml", self.BASE)
        assert main(["oracle-check", "--config", path]) == 0
        out = capsys.readouterr().out
        assert "within_tolerance=true" in out

    def test_threshold_breach_exit_code(self, tmp_path, capsys):
        cfg = {**self.BASE, "oracle": {**self.BASE["oracle"], "tolerance": 1e-8}}
        path = write_yaml(tmp_path, "c.yaml", cfg)
        assert main(["oracle-check", "--config", path]) == 3
        assert "within_tolerance=false" in capsys.readouterr().out


class TestSweepMode:
    def test_phi_sweep_turnover(self, tmp_path, capsys):
        cfg = {
            "market": SIM_CONFIG["market"],
            "forecast": {"phi": 0.2, "nu": 0.1},
            "sweep": {"parameter": "phi", "values": [0.05, 0.1, 0.2, 0.4]},
        }
        path = write_yaml(tmp_path, "c.yaml", cfg)
        assert main(["sweep", "--config", path]) == 0
        out = capsys.readouterr().out
        rows = [l for l in out.splitlines() if l.startswith("phi,")]
        turnovers = [float(r.split(",")[3]) for r in rows]
        expected = [math.sqrt(0.1 * (0.1 + p)) for p in (0.05, 0.1, 0.2, 0.4)]
        assert turnovers == pytest.approx(expected, rel=1e-12)

    def test_unknown_parameter(self, tmp_path, capsys):
        cfg = {
            "market": SIM_CONFIG["market"],
            "forecast": {"phi": 0.2, "nu": 0.1},
            "sweep": {"parameter": "gamma", "values": [0.1]},
        }
        path = write_yaml(tmp_path, "c.yaml", cfg)
        assert main(["sweep", "--config", path]) == 2


class TestPaperExampleMode:
    def test_small_override_run(self, tmp_path, capsys):
        # override the simulation and oracle sizes so the mode runs in seconds
        overrides = {
            "sim": {"dt": 0.02, "horizon": 40.0, "burn_in": 10.0, "n_paths": 50, "seed": 5},
            "oracle": {"dt": 0.01, "horizon": 50.0},
        }
        path = write_yaml(tmp_path, "c.yaml", overrides)
        assert main(["paper-example", "--config", path]) == 0
        out = capsys.readouterr().out
        assert "turnover_closed_form=0.17320" in out
        assert "turnover_process_form=0.14142" in out
        assert "ir_estimate=" in out
        assert "oracle_max_rel_discrepancy=" in out


class TestHelpers:
    def test_impact_conversion(self):
        assert impact_from_bps_per_pct_adv(10.0, 1e7) == pytest.approx(1e-8, rel=1e-14)

    def test_render_report_header_only_without_ensemble(self):
        text = render_report({"a": 1.5}, {"mode": "steady-state"})
        assert text.rstrip("\n").endswith(CSV_HEADER)
        assert "a=1.5" in text

    def test_render_report_float_repr(self):
        text = render_report({"v": 0.1 + 0.2}, {})
        assert "v=0.30000000000000004" in text

    def test_row_count_matches_buckets(self):
        market = MarketParams(kappa=1e-6, lam=1e-8, sigma2=1e-4)
        forecast = OUForecast1D(phi=0.2, nu=0.1)
        law = solve_feedback(market, forecast)
        cfg = SimConfig(dt=0.1, horizon=5.0, burn_in=1.0, n_paths=4, seed=3)
        ens = simulate(market, forecast, law, cfg)
        text = render_report({}, {}, ens)
        data_rows = text.splitlines()[text.splitlines().index(CSV_HEADER) + 1:]
        assert len(data_rows) == cfg.n_buckets
