"""Result files: summary table, per-iteration history and a JSON record.

The JSON record holds the resolved config and everything that depends
only on ``(config, seed)``. Wall times go to the CSV table only, so two
runs of the same config produce byte-identical JSON.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .config import RunConfig
from .errors import ConfigError
from .runner import SweepResult

__all__ = [
    "FORMAT",
    "TABLE_NAME",
    "HISTORY_NAME",
    "RESULT_NAME",
    "fmt",
    "result_record",
    "result_json",
    "write_table",
    "write_history",
    "emit",
    "load_config",
]

FORMAT = "delaylim-result/1"
TABLE_NAME = "table.csv"
HISTORY_NAME = "history.csv"
RESULT_NAME = "result.json"

_ROW_JSON_KEYS = (
    "index", "params", "lim", "status", "n_iter", "n_traj", "n_attractors", "n_steps",
    "spectral_radius", "r0", "cell_diagonal", "history", "attractors", "error",
)


def fmt(x) -> str:
    """Nine significant digits; integers and strings pass through."""
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".9g")
    return str(x)


def _json_float(x):
    # JSON has no NaN; missing values of failed rows become null
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def result_record(result: SweepResult) -> dict:
    runs = []
    for row in result.rows:
        runs.append({k: _json_float(row[k]) for k in _ROW_JSON_KEYS})
    config = result.config.to_dict()
    # the job count never changes a result, so it stays out of the record
    config.pop("jobs")
    return {
        "format": FORMAT,
        "kind": result.kind,
        "config": config,
        "runs": runs,
    }


def result_json(result: SweepResult) -> str:
    return json.dumps(result_record(result), indent=2, sort_keys=True) + "\n"


def write_table(result: SweepResult, path) -> None:
    names = result.swept
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["lim", "status", "n_iter", "n_traj", "n_attractors", "n_steps", "wall_s"])
        for row in result.rows:
            w.writerow(
                [fmt(row["params"][n]) for n in names]
                + [fmt(row[k]) for k in ("lim", "status", "n_iter", "n_traj", "n_attractors", "n_steps", "wall_s")]
            )


def write_history(result: SweepResult, path) -> None:
    names = result.swept
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index"] + names + ["iteration", "lim"])
        for row in result.rows:
            pv = [fmt(row["params"][n]) for n in names]
            for k, v in enumerate(row["history"], start=1):
                w.writerow([row["index"]] + pv + [k, fmt(v)])


def emit(result: SweepResult, out_dir) -> dict:
    """Write the three result files into `out_dir` and return their paths.

    Raises ``OSError`` if the directory cannot be created or written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "table": out / TABLE_NAME,
        "history": out / HISTORY_NAME,
        "result": out / RESULT_NAME,
    }
    write_table(result, paths["table"])
    write_history(result, paths["history"])
    paths["result"].write_text(result_json(result))
    return paths


def load_config(path) -> RunConfig:
    """Read a config from a JSON file.

    Accepts either a bare config dict or a result file written by
    :func:`emit`, whose ``config`` entry is used.
    """
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if isinstance(data, dict) and data.get("format") == FORMAT:
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
