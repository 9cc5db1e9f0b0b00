"""CSV/summary report serialization with a verbatim config echo.

File layout: config echo as ``# ``-prefixed YAML comment lines, a summary
block of ``key=value`` lines, then the fixed-order per-bucket CSV (header
always present, rows only when an ensemble is supplied).  Floats are written
with ``repr`` so identical inputs produce byte-identical files.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
import yaml

from .errors import IOFailure
from .simulator import SimEnsemble

CSV_HEADER = (
    "time_bucket,e_abs_x,se_abs_x,e_abs_xdot,se_abs_xdot,"
    "e_x2,e_xdot2,e_mx,e_xmu,objective_increment"
)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def echo_config(config_dict: dict) -> list[str]:
    dumped = yaml.safe_dump(config_dict, sort_keys=True, default_flow_style=False)
    return ["# " + line for line in dumped.rstrip("\n").split("\n")]


def parse_config_echo(text: str) -> dict:
    """Recover the config dict from a report's comment lines (echo fixed point)."""
    lines = [line[2:] for line in text.splitlines() if line.startswith("# ")]
    return yaml.safe_load("\n".join(lines)) if lines else {}


def render_report(
    summary: dict, config_dict: dict, ensemble: Optional[SimEnsemble] = None
) -> str:
    lines = echo_config(config_dict)
    for key, value in summary.items():
        lines.append(f"{key}={_fmt(value)}")
    lines.append(CSV_HEADER)
    if ensemble is not None:
        for i, t in enumerate(ensemble.bucket_times):
            row = [
                t,
                ensemble.stat("abs_x")[i],
                ensemble.stat_se("abs_x")[i],
                ensemble.stat("abs_xdot")[i],
                ensemble.stat_se("abs_xdot")[i],
                ensemble.stat("x2")[i],
                ensemble.stat("xdot2")[i],
                ensemble.stat("mx")[i],
                ensemble.stat("xmu")[i],
                ensemble.stat("objective")[i],
            ]
            lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_report(
    summary: dict,
    config_dict: dict,
    path: str,
    ensemble: Optional[SimEnsemble] = None,
) -> None:
    text = render_report(summary, config_dict, ensemble)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOFailure(f"cannot write report to {path}: {exc}") from exc
