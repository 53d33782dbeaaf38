"""Command-line entry point: simulation, decomposition, and the experiments.

Every subcommand resolves its configuration (defaults < config file < flags),
validates it, runs the corresponding library operation, and writes CSV tables
plus a JSON run manifest.  CSV floats are emitted with shortest round-trip
precision, files are written to a temporary name and renamed (never partial),
and identical invocations produce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .decompose import drift_residual, split_velocity
from .experiments import (
    TAG_DICHOTOMY,
    fit_convergence_rate,
    run_moment_sweep,
    run_ou_floor,
    run_skorokhod_dichotomy,
    run_theta_sweep,
)
from .integrate import (
    Drift,
    ModelConfig,
    integrate_limit,
    integrate_linear,
    integrate_ou,
    integrate_slow_fast,
    steps_for,
)
from .stable_noise import StableParams, sample_noise_realization, stream

OUTDIR_ENV = "LEVYSK_OUT"

_CONFIG_KEYS = (
    "alpha",
    "c",
    "dim",
    "T",
    "n_steps",
    "eps",
    "theta",
    "drift",
    "drift_gain",
    "drift_offset",
    "u0",
    "v0",
    "seed",
)

_DEFAULTS = {
    "alpha": 1.5,
    "c": 1.0,
    "dim": 1,
    "T": 1.0,
    "n_steps": 0,  # 0 = derive from eps via the stiffness rule
    "eps": 0.05,
    "theta": 0.5,
    "drift": "sine",
    "drift_gain": 1.0,
    "drift_offset": 0.0,
    "u0": 0.0,
    "v0": 1.0,
    "seed": 7,
}


def parse_eps_spec(spec: str) -> list[float]:
    """Parse an eps list: '2^-3..2^-8', a comma list, or a single value."""
    spec = spec.strip()
    m = re.fullmatch(r"2\^(-?\d+)\.\.2\^(-?\d+)", spec)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        step = -1 if a >= b else 1
        return [2.0**e for e in range(a, b + step, step)]
    try:
        return [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"could not parse eps specification {spec!r}") from exc


def load_config(flags: dict, path: str | None = None) -> ModelConfig:
    """Resolve defaults, optional JSON config file, then flag overrides."""
    merged = dict(_DEFAULTS)
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - set(_CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged.update(data)
    for key in _CONFIG_KEYS:
        if flags.get(key) is not None:
            merged[key] = flags[key]
    stable = StableParams(alpha=float(merged["alpha"]), c=float(merged["c"]), dim=int(merged["dim"]))
    drift = Drift(
        kind=str(merged["drift"]),
        gain=float(merged["drift_gain"]),
        offset=float(merged["drift_offset"]),
    )
    return ModelConfig(
        drift=drift,
        u0=merged["u0"],
        v0=merged["v0"],
        eps=float(merged["eps"]),
        theta=float(merged["theta"]),
        stable=stable,
        T=float(merged["T"]),
        n_steps=int(merged["n_steps"]),
        seed=int(merged["seed"]),
    )


# ---------------------------------------------------------------------------
# output plumbing


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _write_atomic(path, "\n".join(lines) + "\n")


def write_manifest(path: Path, payload: dict) -> None:
    _write_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _vec_header(name: str, dim: int) -> list[str]:
    return [f"{name}_{j + 1}" for j in range(dim)]


def _path_table(grid, named_paths) -> tuple[list[str], list[list]]:
    header = ["t"]
    columns = [np.asarray(grid)]
    for name, values in named_paths:
        values = np.asarray(values)
        if values.ndim == 1:
            values = values[:, None]
        header.extend(_vec_header(name, values.shape[1]))
        columns.extend(values[:, j] for j in range(values.shape[1]))
    rows = [[col[i] for col in columns] for i in range(len(columns[0]))]
    return header, rows


class _Run:
    """Collects outputs and wall-clock for one manifest."""

    def __init__(self, command: str, out_dir: Path, params: dict, seed: int):
        self.command = command
        self.out_dir = out_dir
        self.params = params
        self.seed = seed
        self.outputs: list[str] = []
        self.wall_clock: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def emit_csv(self, name: str, header, rows) -> None:
        write_csv(self.out_dir / name, header, rows)
        self.outputs.append(name)
        now = time.perf_counter()
        self.wall_clock[name] = now - self._t0
        self._t0 = now

    def finish(self) -> None:
        manifest = {
            "tool": "levysk",
            "version": __version__,
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "outputs": self.outputs,
            "wall_clock_s": self.wall_clock,
        }
        write_manifest(self.out_dir / f"{self.command}_manifest.json", manifest)


def _out_dir(args) -> Path:
    out = args.out_dir or os.environ.get(OUTDIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _flag_dict(args) -> dict:
    return {key: getattr(args, key, None) for key in _CONFIG_KEYS}


def _single_eps(args) -> float | None:
    if args.eps is None:
        return None
    values = parse_eps_spec(args.eps)
    if len(values) != 1:
        raise ValueError(f"this subcommand takes a single eps, got {values}")
    return values[0]


# ---------------------------------------------------------------------------
# subcommands


def cmd_sample(args) -> int:
    alpha = args.alpha if args.alpha is not None else _DEFAULTS["alpha"]
    c = args.c if args.c is not None else _DEFAULTS["c"]
    dim = args.dim if args.dim is not None else _DEFAULTS["dim"]
    T = args.T if args.T is not None else _DEFAULTS["T"]
    seed = args.seed if args.seed is not None else _DEFAULTS["seed"]
    n_steps = args.n_steps or 1024
    stable = StableParams(alpha=alpha, c=c, dim=dim)
    grid = np.linspace(0.0, T, n_steps + 1)
    noise = sample_noise_realization(
        stable, grid, stream(seed, 5, 0), split=args.split, jump_density=args.jump_density
    )
    out = _out_dir(args)
    params = {"alpha": alpha, "c": c, "dim": dim, "T": T, "n_steps": n_steps,
              "split": bool(args.split), "jump_density": args.jump_density}
    run = _Run("sample", out, params, seed)
    header, rows = _path_table(grid, [("L", noise.cumulative())])
    run.emit_csv(args.out or "noise.csv", header, rows)
    if args.split:
        jump_header = ["t"] + _vec_header("x", dim)
        jump_rows = [
            [t] + list(x) for t, x in zip(noise.jump_times, noise.jump_sizes)
        ]
        run.emit_csv("jumps.csv", jump_header, jump_rows)
    run.finish()
    return 0


def cmd_simulate(args) -> int:
    flags = _flag_dict(args)
    flags["eps"] = _single_eps(args)
    config = load_config(flags, args.config)
    noise = sample_noise_realization(config.stable, config.grid, stream(config.seed, 6, 0))
    U, V = integrate_slow_fast(config, noise)
    Ubar = integrate_limit(config, noise)
    named = [("U", U.values), ("V", V.values), ("Ubar", Ubar.values)]
    if args.with_linear:
        u_lin, v_lin = integrate_linear(config, noise)
        named += [("ulin", u_lin.values), ("vlin", v_lin.values)]
    if args.with_ou:
        Z = integrate_ou(config.eps, noise)
        named.append(("Z", Z.values))
    out = _out_dir(args)
    run = _Run("simulate", out, config.describe(), config.seed)
    header, rows = _path_table(config.grid, named)
    run.emit_csv(args.out or "paths.csv", header, rows)
    run.finish()
    return 0


def cmd_decompose(args) -> int:
    flags = _flag_dict(args)
    flags["eps"] = _single_eps(args)
    config = load_config(flags, args.config)
    noise = sample_noise_realization(config.stable, config.grid, stream(config.seed, 7, 0))
    U, V = integrate_slow_fast(config, noise)
    Ubar = integrate_limit(config, noise)
    dec = split_velocity(config, noise, U)
    residuals = drift_residual(U, Ubar, dec, config, noise)
    named = [
        ("V1", dec.V1bar.values),
        ("V2", dec.V2bar.values),
        ("V3", dec.V3bar.values),
        ("Vrec", dec.V_reconstructed.values),
        ("V", V.values),
        ("I1", residuals["I1"].values),
        ("I2", residuals["I2"].values),
        ("I3", residuals["I3"].values),
        ("I4", residuals["I4"].values),
    ]
    out = _out_dir(args)
    run = _Run("decompose", out, config.describe(), config.seed)
    header, rows = _path_table(config.grid, named)
    run.emit_csv(args.out or "decomposition.csv", header, rows)
    run.finish()
    return 0


def _rows_from(dataklass_rows) -> tuple[list[str], list[list]]:
    header = [f.name for f in dataclasses.fields(dataklass_rows[0])]
    rows = [[getattr(r, name) for name in header] for r in dataklass_rows]
    return header, rows


def cmd_rate(args) -> int:
    flags = _flag_dict(args)
    flags["eps"] = None  # eps comes from the sweep below
    config = load_config(flags, args.config)
    theta_list = [float(t) for t in args.theta.split(",")] if args.theta else [0.25, 0.5, 0.75]
    eps_list = parse_eps_spec(args.eps) if args.eps else parse_eps_spec("2^-3..2^-8")
    fits, cells = run_theta_sweep(config, theta_list, eps_list, args.n)
    out = _out_dir(args)
    params = dict(config.describe(), theta_list=theta_list, eps_list=eps_list, n=args.n)
    del params["eps"], params["theta"], params["n_steps"]
    run = _Run("rate", out, params, config.seed)
    header, rows = _rows_from(cells)
    run.emit_csv("cells.csv", header, rows)
    fit_header = ["theta", "slope", "intercept", "r_squared", "slope_median", "n_eps"]
    fit_rows = []
    for theta in theta_list:
        fit = fits[float(theta)]
        medians = [c.median for c in cells if c.theta == float(theta)]
        med_fit = fit_convergence_rate(eps_list, medians)
        fit_rows.append(
            [theta, fit.slope, fit.intercept, fit.r_squared, med_fit.slope, len(eps_list)]
        )
    run.emit_csv("fits.csv", fit_header, fit_rows)
    run.finish()
    return 0


def cmd_dichotomy(args) -> int:
    flags = _flag_dict(args)
    if flags.get("theta") not in (None, 0.0):
        raise ValueError("the metric dichotomy experiment requires theta = 0")
    flags["theta"] = 0.0
    flags["eps"] = None
    if flags.get("drift") is None:
        flags["drift"] = "zero"
        flags["u0"] = flags.get("u0") if flags.get("u0") is not None else 0.0
    config = load_config(flags, args.config)
    eps_list = parse_eps_spec(args.eps) if args.eps else parse_eps_spec("2^-3..2^-7")
    rows = run_skorokhod_dichotomy(config, eps_list, args.n)
    out = _out_dir(args)
    params = dict(config.describe(), eps_list=eps_list, n=args.n)
    del params["eps"], params["n_steps"]
    run = _Run("dichotomy", out, params, config.seed)
    header, table = _rows_from(rows)
    run.emit_csv("dichotomy.csv", header, table)
    run.finish()
    return 0


def cmd_ou_floor(args) -> int:
    alpha = args.alpha if args.alpha is not None else _DEFAULTS["alpha"]
    c = args.c if args.c is not None else _DEFAULTS["c"]
    dim = args.dim if args.dim is not None else _DEFAULTS["dim"]
    T = args.T if args.T is not None else _DEFAULTS["T"]
    seed = args.seed if args.seed is not None else _DEFAULTS["seed"]
    stable = StableParams(alpha=alpha, c=c, dim=dim)
    eps_list = parse_eps_spec(args.eps) if args.eps else [0.1, 0.05, 0.02, 0.01, 0.005, 0.002]
    rows = run_ou_floor(eps_list, stable, T, args.n, seed)
    out = _out_dir(args)
    params = {"alpha": alpha, "c": c, "dim": dim, "T": T, "eps_list": eps_list, "n": args.n}
    run = _Run("ou-floor", out, params, seed)
    header, table = _rows_from(rows)
    run.emit_csv("ou_floor.csv", header, table)
    run.finish()
    return 0


def cmd_moments(args) -> int:
    flags = _flag_dict(args)
    flags["eps"] = None
    config = load_config(flags, args.config)
    eps_list = parse_eps_spec(args.eps) if args.eps else [2.0**-k for k in range(0, 9)]
    rows = run_moment_sweep(config, eps_list, args.n)
    out = _out_dir(args)
    params = dict(config.describe(), eps_list=eps_list, n=args.n)
    del params["eps"], params["n_steps"]
    run = _Run("moments", out, params, config.seed)
    header, table = _rows_from(rows)
    run.emit_csv("moments.csv", header, table)
    run.finish()
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_model_flags(p: argparse.ArgumentParser, eps_help: str) -> None:
    p.add_argument("--alpha", type=float, help="stability index in (1,2)")
    p.add_argument("--c", type=float, help="characteristic-function constant")
    p.add_argument("--dim", type=int, help="state dimension")
    p.add_argument("--T", type=float, help="time horizon")
    p.add_argument("--n-steps", dest="n_steps", type=int, help="grid steps (0 = auto)")
    p.add_argument("--eps", type=str, help=eps_help)
    p.add_argument("--theta", type=str, help="noise exponent in [0,1)")
    p.add_argument("--drift", type=str, help="drift kind: zero|linear|sine|tanh")
    p.add_argument("--drift-gain", dest="drift_gain", type=float, help="drift gain")
    p.add_argument("--drift-offset", dest="drift_offset", type=float, help="drift offset")
    p.add_argument("--u0", type=float, help="initial position")
    p.add_argument("--v0", type=float, help="initial velocity")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--config", type=str, help="JSON config file (flat keys)")
    p.add_argument("--out-dir", dest="out_dir", type=str, help=f"output dir (${OUTDIR_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levysk",
        description="Small-mass limit laboratory for Levy-driven Langevin dynamics",
    )
    parser.add_argument("--version", action="version", version=f"levysk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a noise realization")
    _add_model_flags(p, "unused for sample")
    p.add_argument("--split", action="store_true", help="tag large jumps explicitly")
    p.add_argument("--jump-density", dest="jump_density", type=float, default=1.0,
                   help="one-sided Levy density constant of the split")
    p.add_argument("--out", type=str, help="noise CSV name")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("simulate", help="one coupled trajectory")
    _add_model_flags(p, "mass parameter (single value)")
    p.add_argument("--with-linear", action="store_true", help="add the linear system columns")
    p.add_argument("--with-ou", action="store_true", help="add the damped convolution column")
    p.add_argument("--out", type=str, help="paths CSV name")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decompose", help="velocity split and error budget")
    _add_model_flags(p, "mass parameter (single value)")
    p.add_argument("--out", type=str, help="decomposition CSV name")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("rate", help="convergence-rate sweep (theta x eps)")
    _add_model_flags(p, "eps sweep, e.g. 2^-3..2^-8 or a comma list")
    p.add_argument("--n", type=int, default=200, help="replicates per cell")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("dichotomy", help="Skorokhod vs uniform metric at theta=0")
    _add_model_flags(p, "eps sweep, e.g. 2^-3..2^-7")
    p.add_argument("--n", type=int, default=200, help="replicates per cell")
    p.set_defaults(func=cmd_dichotomy)

    p = sub.add_parser("ou-floor", help="sup of the damped convolution per eps")
    _add_model_flags(p, "eps list, e.g. 0.1,0.05,0.02")
    p.add_argument("--n", type=int, default=500, help="replicates per cell")
    p.set_defaults(func=cmd_ou_floor)

    p = sub.add_parser("moments", help="uniform moment sweep E sup|U|")
    _add_model_flags(p, "eps list, e.g. 1,0.5,0.25")
    p.add_argument("--n", type=int, default=200, help="replicates per cell")
    p.set_defaults(func=cmd_moments)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "theta", None) is not None and not isinstance(args.theta, float):
        try:
            args.theta = float(args.theta)
        except ValueError:
            print(f"error: theta must be a number, got {args.theta!r}", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
