"""Seeded episode execution, multi-seed sweeps and scaling-law fits.

Reproducibility contract
------------------------
Every episode is a deterministic function of (algo, env, params). The
episode seed feeds ``np.random.SeedSequence(seed)`` whose first two spawned
children become the environment stream and the policy stream, in that
order. Because the environment stream is independent of the policy stream,
two different policies run at the same seed observe the identical loss
matrix, which pairs their regret samples.

Within a sweep, the episode at grid index g and seed index i uses

    seed(g, i) = SeedSequence([base_seed, g, i]).generate_state(1)[0]

so no two episodes share a stream. Aggregation happens after all episodes
are gathered, in (g, i) order, with Welford accumulation; the result is
byte-identical no matter how many workers executed the episodes.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .accounting import (
    PHASE_ONE,
    EpisodeTrace,
    ExperimentParams,
    GapSpec,
    RegretLedger,
)
from .environments import (
    BernoulliEnv,
    DriftingConstrainedEnv,
    Environment,
    FixedSequenceEnv,
    dekel_conditioned_sequence,
    dekel_sequence,
    uniform_gaps,
)
from .policies import (
    ConstantArm,
    MiniBatchedTsallisInf,
    Policy,
    TsallisInf,
    TwoPhaseTsallis,
    UniformRandom,
    block_size,
)

__all__ = [
    "ALGO_NAMES",
    "ENV_NAMES",
    "SweepConfig",
    "EpisodeResult",
    "GridPointResult",
    "AggregateResult",
    "SlopeFit",
    "derive_episode_seed",
    "build_policy",
    "build_environment",
    "run_episode",
    "run_sweep",
    "fit_loglog_slope",
]

ALGO_NAMES = ("tsallis", "batched", "switch-tsallis-switch", "constant", "uniform")
ENV_NAMES = ("bernoulli", "drifting", "dekel", "dekel-h")


@dataclass(frozen=True)
class SweepConfig:
    """One experiment sweep: a policy, an environment, and a grid of T."""

    algo: str
    env: str
    T_grid: tuple[int, ...]
    K: int = 2
    lam: float = 1.0
    delta: float | None = None
    seeds: int = 1
    base_seed: int = 0
    block_len: int | None = None
    base_mean: float | None = None
    fixed_losses: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        if self.algo not in ALGO_NAMES:
            raise ValueError(f"unknown algo {self.algo!r}; choose from {ALGO_NAMES}")
        if self.env not in ENV_NAMES and self.env != "fixed":
            raise ValueError(
                f"unknown env {self.env!r}; choose from {ENV_NAMES + ('fixed',)}"
            )
        if self.env == "fixed" and self.fixed_losses is None:
            raise ValueError("env 'fixed' requires fixed_losses")
        if not self.T_grid:
            raise ValueError("T grid must not be empty")
        if self.seeds < 1:
            raise ValueError(f"seeds must be >= 1, got {self.seeds}")
        for T in self.T_grid:
            ExperimentParams(T=T, K=self.K, lam=self.lam, seed=0)


def derive_episode_seed(base_seed: int, grid_index: int, seed_index: int) -> int:
    """Fixed mixing of (base seed, grid index, seed index) into a 64-bit seed."""
    ss = np.random.SeedSequence([base_seed, grid_index, seed_index])
    return int(ss.generate_state(1, np.uint64)[0])


def build_policy(
    algo: str,
    params: ExperimentParams,
    block_len: int | None = None,
) -> Policy:
    """Instantiate a policy by registry name for one episode."""
    if algo == "tsallis":
        return TsallisInf(params.K)
    if algo == "batched":
        B = block_len if block_len is not None else block_size(
            params.T, params.K, params.lam
        )
        return MiniBatchedTsallisInf(params.K, B, horizon=params.T)
    if algo == "switch-tsallis-switch":
        return TwoPhaseTsallis(params.T, params.K, params.lam, block_len=block_len)
    if algo == "constant":
        return ConstantArm(params.K, 0)
    if algo == "uniform":
        return UniformRandom(params.K)
    raise ValueError(f"unknown algo {algo!r}; choose from {ALGO_NAMES}")


def default_dekel_delta(T: int) -> float:
    """Default walk-adversary gap T^(-1/3), the critical scaling for T^(2/3) regret."""
    return T ** (-1.0 / 3.0)


def build_environment(
    env: str,
    params: ExperimentParams,
    env_rng: np.random.Generator,
    delta: float | None = None,
    base_mean: float | None = None,
    fixed_losses: np.ndarray | None = None,
) -> Environment:
    """Instantiate an environment by registry name for one episode.

    The walk adversaries consume ``env_rng`` here, at construction; the
    i.i.d. families consume it later, per round.
    """
    K, T = params.K, params.T
    if env == "bernoulli":
        if delta is None:
            raise ValueError("bernoulli environment requires delta")
        base = base_mean if base_mean is not None else 0.5 - delta / 2.0
        return BernoulliEnv(uniform_gaps(K, delta), base)
    if env == "drifting":
        if delta is None:
            raise ValueError("drifting environment requires delta")
        return DriftingConstrainedEnv(uniform_gaps(K, delta), T)
    if env == "dekel":
        d = delta if delta is not None else default_dekel_delta(T)
        losses, _, gap_spec = dekel_sequence(T, K, d, env_rng)
        return FixedSequenceEnv(losses, gap_spec)
    if env == "dekel-h":
        d = delta if delta is not None else default_dekel_delta(T)
        losses, _, gap_spec = dekel_conditioned_sequence(T, K, d, env_rng)
        return FixedSequenceEnv(losses, gap_spec)
    if env == "fixed":
        if fixed_losses is None:
            raise ValueError("fixed environment requires the loss matrix")
        return FixedSequenceEnv(np.asarray(fixed_losses, dtype=np.float64))
    raise ValueError(f"unknown env {env!r}; choose from {ENV_NAMES + ('fixed',)}")


def run_episode(
    algo: str,
    env: str | Environment,
    params: ExperimentParams,
    *,
    delta: float | None = None,
    base_mean: float | None = None,
    block_len: int | None = None,
    fixed_losses: np.ndarray | None = None,
) -> EpisodeTrace:
    """Play one seeded episode of T rounds and return its full trace.

    ``env`` may be a registry name or a prebuilt :class:`Environment`; either
    way the loss matrix is materialized up front from the environment stream,
    so it cannot depend on the policy's actions.
    """
    root = np.random.SeedSequence(params.seed)
    env_ss, pol_ss = root.spawn(2)
    env_rng = np.random.default_rng(env_ss)
    pol_rng = np.random.default_rng(pol_ss)

    if isinstance(env, Environment):
        environment = env
    else:
        environment = build_environment(
            env, params, env_rng,
            delta=delta, base_mean=base_mean, fixed_losses=fixed_losses,
        )
    losses = environment.sample_matrix(params.T, env_rng)
    gaps = environment.gaps()
    policy = build_policy(algo, params, block_len=block_len)

    T, lam = params.T, params.lam
    ledger = RegretLedger(params.K)
    arms = np.empty(T, dtype=np.int64)
    observed = np.empty(T, dtype=np.float64)
    phases = np.empty(T, dtype=np.int8)
    switches = np.empty(T, dtype=np.int64)
    regret = np.empty(T, dtype=np.float64)
    scr = np.empty(T, dtype=np.float64)
    has_gaps = gaps is not None

    for i in range(T):
        arm = policy.act(pol_rng)
        phases[i] = policy.phase
        loss_vec = losses[i]
        loss = float(loss_vec[arm])
        policy.observe(arm, loss)
        ledger.record_step(arm, loss_vec, gaps)
        arms[i] = arm
        observed[i] = loss
        switches[i] = ledger.switch_count
        if has_gaps:
            regret[i] = ledger.pseudo_regret
        else:
            regret[i] = ledger.cumulative_player_loss - ledger.per_arm_loss.min()
        scr[i] = regret[i] + lam * ledger.switch_count

    return EpisodeTrace(
        lam=lam,
        arms=arms,
        losses=observed,
        phases=phases,
        switches=switches,
        regret=regret,
        scr=scr,
        ledger=ledger,
        has_gaps=has_gaps,
        break_round=getattr(policy, "break_round", None),
    )


@dataclass(frozen=True)
class EpisodeResult:
    """Summary metrics of one episode, as aggregated by sweeps."""

    pseudo_regret: float  # realized-regret fallback when the env has no gaps
    realized_regret: float
    switches: int
    switching_cost_regret: float
    break_round: int | None
    entered_phase2: bool
    has_gaps: bool


def episode_metrics(trace: EpisodeTrace) -> EpisodeResult:
    ledger = trace.ledger
    realized = ledger.realized_regret()
    pseudo = ledger.pseudo_regret if trace.has_gaps else realized
    return EpisodeResult(
        pseudo_regret=pseudo,
        realized_regret=realized,
        switches=ledger.switch_count,
        switching_cost_regret=pseudo + trace.lam * ledger.switch_count,
        break_round=trace.break_round,
        entered_phase2=trace.break_round is not None,
        has_gaps=trace.has_gaps,
    )


class _Welford:
    """Numerically stable running mean and unbiased standard error."""

    def __init__(self) -> None:
        self.n = 0
        self.mean = 0.0
        self._m2 = 0.0

    def push(self, x: float) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self._m2 += delta * (x - self.mean)

    @property
    def se(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(self._m2 / (self.n - 1)) / math.sqrt(self.n)


@dataclass(frozen=True)
class GridPointResult:
    """Aggregated metrics for one grid point of a sweep."""

    T: int
    n_seeds: int
    mean_pseudo_regret: float
    se_pseudo_regret: float
    mean_realized_regret: float
    se_realized_regret: float
    mean_switches: float
    se_switches: float
    mean_switching_cost_regret: float
    se_switching_cost_regret: float
    phase2_fraction: float
    break_round_mean: float | None
    break_round_se: float | None
    has_gaps: bool


@dataclass(frozen=True)
class AggregateResult:
    config: SweepConfig
    points: tuple[GridPointResult, ...]


def _run_indexed_episode(
    config: SweepConfig, grid_index: int, seed_index: int
) -> EpisodeTrace:
    T = config.T_grid[grid_index]
    params = ExperimentParams(
        T=T,
        K=config.K,
        lam=config.lam,
        seed=derive_episode_seed(config.base_seed, grid_index, seed_index),
    )
    fixed = (
        np.asarray(config.fixed_losses, dtype=np.float64)
        if config.fixed_losses is not None
        else None
    )
    try:
        return run_episode(
            config.algo,
            config.env,
            params,
            delta=config.delta,
            base_mean=config.base_mean,
            block_len=config.block_len,
            fixed_losses=fixed,
        )
    except Exception as exc:
        raise RuntimeError(
            f"episode failed at T={T} (grid index {grid_index}), "
            f"seed index {seed_index}: {exc}"
        ) from exc


def _worker(args: tuple[SweepConfig, int, int]) -> EpisodeResult:
    config, g, i = args
    return episode_metrics(_run_indexed_episode(config, g, i))


def _aggregate_point(
    config: SweepConfig, T: int, results: Sequence[EpisodeResult]
) -> GridPointResult:
    pseudo, realized, switches, scr = (
        _Welford(), _Welford(), _Welford(), _Welford(),
    )
    breaks = _Welford()
    n_phase2 = 0
    for r in results:
        pseudo.push(r.pseudo_regret)
        realized.push(r.realized_regret)
        switches.push(float(r.switches))
        scr.push(r.switching_cost_regret)
        if r.entered_phase2:
            n_phase2 += 1
            breaks.push(float(r.break_round))
    # Derived rather than averaged so that the identity
    # mean_scr == mean_pseudo + lam * mean_switches holds exactly.
    mean_scr = pseudo.mean + config.lam * switches.mean
    return GridPointResult(
        T=T,
        n_seeds=len(results),
        mean_pseudo_regret=pseudo.mean,
        se_pseudo_regret=pseudo.se,
        mean_realized_regret=realized.mean,
        se_realized_regret=realized.se,
        mean_switches=switches.mean,
        se_switches=switches.se,
        mean_switching_cost_regret=mean_scr,
        se_switching_cost_regret=scr.se,
        phase2_fraction=n_phase2 / len(results),
        break_round_mean=breaks.mean if n_phase2 > 0 else None,
        break_round_se=breaks.se if n_phase2 > 0 else None,
        has_gaps=results[0].has_gaps,
    )


def run_sweep(
    config: SweepConfig,
    workers: int = 1,
    on_trace: Callable[[int, int, EpisodeTrace], None] | None = None,
) -> AggregateResult:
    """Run seeds x grid episodes and aggregate per grid point.

    With ``workers > 1`` episodes execute in a process pool; results are
    still gathered and aggregated in (grid index, seed index) order, so the
    output is byte-identical for any worker count. When ``on_trace`` is
    supplied (used for per-round trace emission) episodes run sequentially
    and the callback receives every episode's full trace.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    jobs = [
        (config, g, i)
        for g in range(len(config.T_grid))
        for i in range(config.seeds)
    ]
    if on_trace is not None or workers == 1:
        results = []
        for cfg, g, i in jobs:
            trace = _run_indexed_episode(cfg, g, i)
            if on_trace is not None:
                on_trace(g, i, trace)
            results.append(episode_metrics(trace))
    else:
        chunk = max(1, len(jobs) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, jobs, chunksize=chunk))

    points = []
    for g, T in enumerate(config.T_grid):
        block = results[g * config.seeds : (g + 1) * config.seeds]
        points.append(_aggregate_point(config, T, block))
    return AggregateResult(config=config, points=tuple(points))


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line through (ln T, ln value)."""

    slope: float
    intercept: float
    max_residual: float


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> SlopeFit:
    """Fit value ~ exp(intercept) * T^slope from (T, value) pairs."""
    if len(points) < 3:
        raise ValueError(f"need at least 3 points, got {len(points)}")
    T = np.array([p[0] for p in points], dtype=np.float64)
    v = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(T <= 0.0) or np.any(v <= 0.0):
        raise ValueError("all T and values must be positive for a log-log fit")
    x, y = np.log(T), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.abs(y - (slope * x + intercept)).max())
    return SlopeFit(slope=float(slope), intercept=float(intercept), max_residual=residual)
