"""Command-line front end.

``delaylim estimate`` runs one LIM estimation, ``delaylim sweep`` runs one
per point of a 1-D or 2-D parameter grid. Both write ``table.csv``,
``history.csv`` and ``result.json`` into the output directory, which
defaults to ``$DELAYLIM_OUT`` or ``./delaylim_out``.

Exit codes: 0 on success (an unstable equilibrium is a result, not an
error), 2 for a bad configuration, 3 when files cannot be read or written.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import PRESETS, SYSTEMS, RunConfig, SweepAxis
from .errors import ConfigError
from .output import emit, fmt, load_config
from .runner import run_single, run_sweep

__all__ = ["main", "build_parser", "config_from_args", "OUT_ENV", "EXIT_OK", "EXIT_CONFIG", "EXIT_IO"]

OUT_ENV = "DELAYLIM_OUT"
DEFAULT_OUT = "delaylim_out"
EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors already; keep the message short
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def parse_param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise ConfigError(f"--param must look like name=value, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise ConfigError(f"--param {name}: {value!r} is not a number") from None


def parse_bounds(text: str) -> tuple[list[float], list[float]]:
    """``L`` for the box ``[-L, L]`` in every coordinate (dimension taken
    from the system preset), or ``lo1:up1,lo2:up2,...``."""
    if ":" not in text:
        try:
            half = float(text)
        except ValueError:
            raise ConfigError(f"bad --bounds {text!r}") from None
        if not half > 0:
            raise ConfigError("--bounds half-width must be positive")
        return [-half], [half]
    lower, upper = [], []
    for part in text.split(","):
        lo, sep, up = part.partition(":")
        try:
            lower.append(float(lo))
            upper.append(float(up))
        except ValueError:
            raise ConfigError(f"bad --bounds entry {part!r}") from None
    return lower, upper


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config or result file to start from")
    common.add_argument("--system", choices=sorted(SYSTEMS))
    common.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                        help="system parameter; repeatable")
    common.add_argument("--bounds", metavar="L | lo:up,...",
                        help="grid box; write --bounds=-5:5,-5:5 when the first bound is negative")
    common.add_argument("--ndisc", type=int, help="cells per axis")
    common.add_argument("--r", type=int, help="sampling delay number")
    common.add_argument("--iters", type=int, help="trajectories per estimation")
    common.add_argument("--tmax", type=float, help="simulation time limit per trajectory")
    common.add_argument("--init", choices=["constant", "linear", "jump", "freevib"])
    common.add_argument("--weights", help="'default' or comma-separated metric weights")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")

    parser = _Parser(prog="delaylim", description="Local integrity measure of delayed-system equilibria.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("estimate", parents=[common], help="single LIM estimation")
    sp = sub.add_parser("sweep", parents=[common], help="LIM over a parameter grid")
    sp.add_argument("--sweep", action="append", default=[], metavar="NAME:MIN:MAX:COUNT",
                    help="sweep axis; give once or twice")
    return parser


def config_from_args(args) -> RunConfig:
    """Merge a loaded config (if any) with command-line overrides."""
    base = load_config(args.config) if args.config else RunConfig()
    updates = {}
    system = args.system or base.system
    if args.system and args.system != base.system:
        # parameters and preset-resolved fields of another system do not carry over
        base = RunConfig(system=system, seed=base.seed, jobs=base.jobs, n_iter=base.n_iter,
                         t_max=base.t_max, init=base.init)
    updates["system"] = system
    params = dict(base.params)
    for text in args.param:
        name, value = parse_param(text)
        params[name] = value
    updates["params"] = params
    if getattr(args, "sweep", None):
        updates["sweep"] = tuple(SweepAxis.parse(s) for s in args.sweep)
    if args.bounds is not None:
        lower, upper = parse_bounds(args.bounds)
        if len(lower) == 1:
            dim = len(PRESETS[system]["lower"])
            lower, upper = lower * dim, upper * dim
        updates["lower"], updates["upper"] = lower, upper
    simple = {"ndisc": "n_disc", "r": "r", "iters": "n_iter", "tmax": "t_max",
              "init": "init", "seed": "seed", "jobs": "jobs"}
    for flag, name in simple.items():
        value = getattr(args, flag)
        if value is not None:
            updates[name] = value
    if args.weights is not None:
        updates["weights"] = None if args.weights == "default" else _float_list(args.weights)
    return dataclasses.replace(base, **updates)


def _summary(result) -> str:
    lines = []
    names = result.swept
    for row in result.rows:
        where = " ".join(f"{n}={fmt(row['params'][n])}" for n in names)
        msg = f"lim={fmt(row['lim'])} status={row['status']} n_traj={row['n_traj']} n_steps={row['n_steps']}"
        if row["error"]:
            msg += f" error={row['error']}"
        lines.append((where + " " if where else "") + msg)
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = config_from_args(args)
        if args.command == "estimate":
            result = run_single(config)
        else:
            result = run_sweep(config)
    except ConfigError as exc:
        print(f"delaylim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"delaylim: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    out = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    try:
        paths = emit(result, out)
    except OSError as exc:
        print(f"delaylim: cannot write results to {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(_summary(result))
    print(f"wrote {paths['table']}, {paths['history']}, {paths['result']}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
