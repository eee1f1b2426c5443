"""Command-line front end: config parsing, dispatch, CSV/JSON emission.

The CLI performs no computation beyond formatting and delegating the
optional slope fit; every number in its outputs comes from the harness.

Stable output contracts
-----------------------
Per-round trace CSV (``--emit-trace``): header exactly

    t,arm,loss,phase,switches,pseudo_regret,switching_cost_regret

one row per round, floats printed with 9 significant digits, file
newline-terminated, phase in {1, 2}. Arms are 0-based. For environments
without gap information the pseudo_regret column carries the running
realized regret instead.

Summary JSON: a single document with keys ``config``, ``grid``,
``slope_fit`` (present iff ``--slope``) and ``manifest``, in that order.
Floats are emitted as decimal strings with 9 significant digits so files
diff byte-stably; two runs of the same config differ only in the manifest's
timing values.

Config files (``--config``) are flat ``key = value`` text whose keys mirror
the long flag names (``base-seed = 7``); command-line flags override file
values and unknown keys are rejected. Grids use commas: ``T = 1024,2048``.

Exit codes: 0 success, 2 config error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .accounting import EpisodeTrace
from .harness import (
    ALGO_NAMES,
    AggregateResult,
    SlopeFit,
    SweepConfig,
    fit_loglog_slope,
    run_sweep,
)

__all__ = ["ConfigError", "CliRun", "parse_config", "emit_trace_csv",
           "emit_summary_json", "emit_summary_csv", "config_echo", "main"]

ENV_CHOICES = ("bernoulli", "drifting", "dekel", "dekel-h")
TRACE_HEADER = "t,arm,loss,phase,switches,pseudo_regret,switching_cost_regret"
SUMMARY_CSV_HEADER = (
    "T,mean_pseudo_regret,se_pseudo_regret,mean_switches,se_switches,"
    "mean_switching_cost_regret,phase2_fraction,break_round_mean"
)

_CONFIG_KEYS = (
    "algo", "env", "T", "K", "lambda", "delta", "seeds", "base-seed",
    "block-size", "out", "format", "emit-trace", "slope", "workers",
)


class ConfigError(Exception):
    """Invalid or contradictory configuration; maps to exit code 2."""


@dataclass(frozen=True)
class CliRun:
    """A fully resolved invocation: the sweep plus output options."""

    sweep: SweepConfig
    env_spec: str  # raw --env value, e.g. "dekel" or "fixed:losses.csv"
    out: Path
    format: str
    emit_trace: bool
    slope: bool
    workers: int


def _fmt(x: float) -> str:
    """Floats rendered with 9 significant digits, the package-wide format."""
    return format(float(x), ".9g")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="switching-bandits",
        description="Run seeded bandit experiments with switching costs.",
    )
    p.add_argument("--config", type=str, default=None,
                   help="flat key=value config file; flags override it")
    p.add_argument("--algo", type=str, default=None, choices=ALGO_NAMES)
    p.add_argument("--env", type=str, default=None,
                   help="bernoulli|drifting|dekel|dekel-h|fixed:<path>")
    p.add_argument("--T", type=int, action="append", default=None,
                   help="horizon; repeat the flag for a grid")
    p.add_argument("--K", type=int, default=None, help="number of arms")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="cost per switch")
    p.add_argument("--delta", type=float, default=None, help="arm gap")
    p.add_argument("--seeds", type=int, default=None, help="seeds per grid point")
    p.add_argument("--base-seed", type=int, default=None)
    p.add_argument("--block-size", type=int, default=None,
                   help="override the computed block length")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--format", type=str, default=None, choices=("csv", "json"),
                   help="summary file format (default json)")
    p.add_argument("--emit-trace", action="store_const", const=True, default=None,
                   help="write one per-round CSV per episode")
    p.add_argument("--slope", action="store_const", const=True, default=None,
                   help="fit the log-log exponent across the T grid")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel episode workers (default 1)")
    return p


def _read_config_file(path: str) -> dict[str, str]:
    text = Path(path).read_text()
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _bool_from(value: str, key: str) -> bool:
    low = value.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ConfigError(f"--{key}: expected true/false, got {value!r}")


def _merge(flag, file_values: dict[str, str], key: str, convert):
    """Flag value if given, else converted file value, else None."""
    if flag is not None:
        return flag
    if key in file_values:
        try:
            return convert(file_values[key])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"--{key}: {exc}") from exc
    return None


def _parse_T_list(value: str) -> list[int]:
    return [int(part) for part in value.split(",") if part.strip() != ""]


def _load_fixed_losses(path_str: str) -> np.ndarray:
    path = Path(path_str)
    if not path.exists():
        raise ConfigError(f"--env: fixed sequence file not found: {path}")
    try:
        losses = np.loadtxt(path, delimiter=",", ndmin=2)
    except Exception as exc:
        raise ConfigError(f"--env: could not parse {path} as CSV: {exc}") from exc
    return losses


def parse_config(argv: list[str] | None = None) -> CliRun:
    """Resolve flags plus optional config file into a :class:`CliRun`.

    Raises :class:`ConfigError` on invalid, missing or contradictory values;
    every message names the offending flag.
    """
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        raise ConfigError("invalid command line (see usage above)") from exc

    file_values = _read_config_file(ns.config) if ns.config else {}

    algo = _merge(ns.algo, file_values, "algo", str)
    env_spec = _merge(ns.env, file_values, "env", str)
    T_grid = _merge(ns.T, file_values, "T", _parse_T_list)
    K = _merge(ns.K, file_values, "K", int)
    lam = _merge(ns.lam, file_values, "lambda", float)
    delta = _merge(ns.delta, file_values, "delta", float)
    seeds = _merge(ns.seeds, file_values, "seeds", int)
    base_seed = _merge(ns.base_seed, file_values, "base-seed", int)
    block = _merge(ns.block_size, file_values, "block-size", int)
    out = _merge(ns.out, file_values, "out", str)
    fmt = _merge(ns.format, file_values, "format", str)
    emit_trace = _merge(ns.emit_trace, file_values, "emit-trace",
                        lambda v: _bool_from(v, "emit-trace"))
    slope = _merge(ns.slope, file_values, "slope",
                   lambda v: _bool_from(v, "slope"))
    workers = _merge(ns.workers, file_values, "workers", int)

    if algo is None:
        raise ConfigError("--algo is required")
    if algo not in ALGO_NAMES:
        raise ConfigError(f"--algo: unknown algorithm {algo!r}")
    if env_spec is None:
        raise ConfigError("--env is required")
    if out is None:
        raise ConfigError("--out is required")

    fixed_losses: np.ndarray | None = None
    if env_spec.startswith("fixed:"):
        env_name = "fixed"
        fixed_losses = _load_fixed_losses(env_spec[len("fixed:"):])
    elif env_spec in ENV_CHOICES:
        env_name = env_spec
    else:
        raise ConfigError(
            f"--env: unknown environment {env_spec!r}; expected one of "
            f"{', '.join(ENV_CHOICES)} or fixed:<path>"
        )

    if env_name == "fixed":
        if delta is not None:
            raise ConfigError("--delta cannot be combined with --env fixed:<path>")
        if K is None:
            K = int(fixed_losses.shape[1])
        elif K != fixed_losses.shape[1]:
            raise ConfigError(
                f"--K: {K} does not match the fixed sequence's "
                f"{fixed_losses.shape[1]} columns"
            )
        if T_grid is None:
            T_grid = [int(fixed_losses.shape[0])]
        for T in T_grid:
            if T != fixed_losses.shape[0]:
                raise ConfigError(
                    f"--T: {T} does not match the fixed sequence's "
                    f"{fixed_losses.shape[0]} rows"
                )

    if T_grid is None or not T_grid:
        raise ConfigError("--T is required (repeat the flag for a grid)")
    K = 2 if K is None else K
    lam = 1.0 if lam is None else lam
    seeds = 1 if seeds is None else seeds
    base_seed = 0 if base_seed is None else base_seed
    fmt = "json" if fmt is None else fmt
    emit_trace = bool(emit_trace)
    slope = bool(slope)
    workers = 1 if workers is None else workers

    if K < 2:
        raise ConfigError(f"--K: must be >= 2, got {K}")
    for T in T_grid:
        if T < K:
            raise ConfigError(f"--T: must be >= K={K}, got {T}")
    if lam < 0.0:
        raise ConfigError(f"--lambda: must be >= 0, got {lam}")
    if seeds < 1:
        raise ConfigError(f"--seeds: must be >= 1, got {seeds}")
    if base_seed < 0:
        raise ConfigError(f"--base-seed: must be >= 0, got {base_seed}")
    if workers < 1:
        raise ConfigError(f"--workers: must be >= 1, got {workers}")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"--format: expected csv or json, got {fmt!r}")

    if delta is not None and not 0.0 < delta <= 1.0:
        raise ConfigError(f"--delta: must lie in (0, 1], got {delta}")
    if env_name in ("bernoulli", "drifting") and delta is None:
        raise ConfigError(f"--delta is required for --env {env_name}")
    if env_name == "drifting" and delta > 0.9:
        raise ConfigError(f"--delta: drifting path needs delta <= 0.9, got {delta}")
    if env_name == "dekel-h":
        if delta is not None and delta > 1.0 / 6.0:
            raise ConfigError(
                f"--delta: the conditioned walk needs delta <= 1/6, got {delta}"
            )
        if delta is None:
            for T in T_grid:
                if T ** (-1.0 / 3.0) > 1.0 / 6.0:
                    raise ConfigError(
                        f"--T: default delta T^(-1/3) exceeds 1/6 at T={T}; "
                        "pass --delta <= 1/6 explicitly"
                    )

    if block is not None:
        if block < 1:
            raise ConfigError(f"--block-size: must be >= 1, got {block}")
        if algo not in ("batched", "switch-tsallis-switch"):
            raise ConfigError(
                "--block-size only applies to --algo batched or switch-tsallis-switch"
            )
    if algo == "batched" and lam == 0.0 and block is None:
        raise ConfigError(
            "--block-size is required for --algo batched with --lambda 0"
        )
    if slope:
        if len(T_grid) < 3:
            raise ConfigError("--slope needs a grid of at least 3 T values")
        if fmt != "json":
            raise ConfigError("--slope requires --format json")

    sweep = SweepConfig(
        algo=algo,
        env=env_name,
        T_grid=tuple(T_grid),
        K=K,
        lam=lam,
        delta=delta,
        seeds=seeds,
        base_seed=base_seed,
        block_len=block,
        fixed_losses=(
            tuple(map(tuple, fixed_losses.tolist()))
            if fixed_losses is not None
            else None
        ),
    )
    return CliRun(
        sweep=sweep,
        env_spec=env_spec,
        out=Path(out),
        format=fmt,
        emit_trace=emit_trace,
        slope=slope,
        workers=workers,
    )


def config_echo(run: CliRun) -> dict[str, str]:
    """The resolved config as flag-name keyed strings; round-trips via a file.

    Execution details that do not shape the results (worker count, like the
    timings) are not echoed, so summaries from 1 and N workers stay
    byte-identical.
    """
    cfg = run.sweep
    echo = {
        "algo": cfg.algo,
        "env": run.env_spec,
        "T": ",".join(str(T) for T in cfg.T_grid),
        "K": str(cfg.K),
        "lambda": _fmt(cfg.lam),
        "seeds": str(cfg.seeds),
        "base-seed": str(cfg.base_seed),
        "out": str(run.out),
        "format": run.format,
        "emit-trace": "true" if run.emit_trace else "false",
        "slope": "true" if run.slope else "false",
    }
    if cfg.delta is not None:
        echo["delta"] = _fmt(cfg.delta)
    if cfg.block_len is not None:
        echo["block-size"] = str(cfg.block_len)
    return echo


def config_file_text(run: CliRun) -> str:
    """Render the resolved config in the flat key=value file format."""
    return "".join(f"{k} = {v}\n" for k, v in config_echo(run).items())


def emit_trace_csv(trace: EpisodeTrace, path: Path | str) -> None:
    """Write one per-round CSV with the stable header and formats."""
    lines = [TRACE_HEADER]
    for i in range(trace.T):
        lines.append(
            f"{i + 1},{trace.arms[i]},{_fmt(trace.losses[i])},"
            f"{trace.phases[i]},{trace.switches[i]},"
            f"{_fmt(trace.regret[i])},{_fmt(trace.scr[i])}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _grid_entry(point) -> dict:
    return {
        "T": point.T,
        "mean_pseudo_regret": _fmt(point.mean_pseudo_regret),
        "se_pseudo_regret": _fmt(point.se_pseudo_regret),
        "mean_switches": _fmt(point.mean_switches),
        "se_switches": _fmt(point.se_switches),
        "mean_switching_cost_regret": _fmt(point.mean_switching_cost_regret),
        "phase2_fraction": _fmt(point.phase2_fraction),
        "break_round_mean": (
            _fmt(point.break_round_mean)
            if point.break_round_mean is not None
            else None
        ),
    }


def emit_summary_json(
    result: AggregateResult,
    run: CliRun,
    path: Path | str,
    slope_fit: SlopeFit | None = None,
    episode_files: list[str] | None = None,
    wall_seconds: float = 0.0,
) -> None:
    """Write the summary document with fixed key order and string floats."""
    doc: dict = {
        "config": config_echo(run),
        "grid": [_grid_entry(p) for p in result.points],
    }
    if slope_fit is not None:
        doc["slope_fit"] = {
            "slope": _fmt(slope_fit.slope),
            "intercept": _fmt(slope_fit.intercept),
            "max_residual": _fmt(slope_fit.max_residual),
        }
    doc["manifest"] = {
        "artifact_version": __version__,
        "episode_files": episode_files or [],
        "timings": {"wall_seconds": _fmt(wall_seconds)},
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def emit_summary_csv(result: AggregateResult, path: Path | str) -> None:
    """Grid summary as CSV, one row per grid point (same fields as JSON)."""
    lines = [SUMMARY_CSV_HEADER]
    for p in result.points:
        break_mean = _fmt(p.break_round_mean) if p.break_round_mean is not None else ""
        lines.append(
            f"{p.T},{_fmt(p.mean_pseudo_regret)},{_fmt(p.se_pseudo_regret)},"
            f"{_fmt(p.mean_switches)},{_fmt(p.se_switches)},"
            f"{_fmt(p.mean_switching_cost_regret)},{_fmt(p.phase2_fraction)},"
            f"{break_mean}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _execute(run: CliRun) -> int:
    run.out.mkdir(parents=True, exist_ok=True)
    episode_files: list[str] = []

    on_trace = None
    if run.emit_trace:
        def on_trace(g: int, i: int, trace: EpisodeTrace) -> None:
            T = run.sweep.T_grid[g]
            path = run.out / f"trace_T{T}_seed{i:04d}.csv"
            emit_trace_csv(trace, path)
            episode_files.append(path.name)

    start = time.perf_counter()
    result = run_sweep(run.sweep, workers=run.workers, on_trace=on_trace)
    wall = time.perf_counter() - start

    slope_fit = None
    if run.slope:
        points = [
            (float(p.T), p.mean_switching_cost_regret) for p in result.points
        ]
        slope_fit = fit_loglog_slope(points)

    if run.format == "json":
        summary = run.out / "summary.json"
        emit_summary_json(
            result, run, summary,
            slope_fit=slope_fit,
            episode_files=episode_files,
            wall_seconds=wall,
        )
    else:
        summary = run.out / "summary.csv"
        emit_summary_csv(result, summary)
    print(summary)
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        run = parse_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _execute(run)
    except Exception as exc:  # runtime failures map to exit code 3
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
