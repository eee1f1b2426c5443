"""Bandit simulation lab for regret under switching costs.

A numpy library for running seeded multi-armed-bandit experiments where the
learner pays a price for changing arms: Tsallis-entropy FTRL learners, their
mini-batched and switch-budgeted two-phase variants, stochastic and
adversarial loss generators (including the multi-scale Gaussian walk used in
switching-cost lower bounds), and a sweep harness with regret-scaling fits.
"""

__version__ = "0.1.0"

from .accounting import (
    EpisodeTrace,
    ExperimentParams,
    GapSpec,
    MissingGapsError,
    RegretLedger,
)
from .environments import (
    BernoulliEnv,
    DriftingConstrainedEnv,
    Environment,
    FixedSequenceEnv,
    WalkTrace,
    arm_flipping_sequence,
    dekel_conditioned_sequence,
    dekel_sequence,
    dyadic_level,
    dyadic_parent,
    multiscale_walk_batch,
    uniform_gaps,
    walk_sigma,
)
from .ftrl import (
    SimplexDistribution,
    eta_schedule,
    importance_weighted_estimate,
    tsallis_distribution,
    tsallis_objective,
)
from .harness import (
    AggregateResult,
    EpisodeResult,
    GridPointResult,
    SlopeFit,
    SweepConfig,
    build_environment,
    build_policy,
    derive_episode_seed,
    fit_loglog_slope,
    run_episode,
    run_sweep,
)
from .policies import (
    ConstantArm,
    MiniBatchedTsallisInf,
    Policy,
    TsallisInf,
    TwoPhaseTsallis,
    UniformRandom,
    block_size,
    switch_threshold,
)

__all__ = [
    "__version__",
    "EpisodeTrace",
    "ExperimentParams",
    "GapSpec",
    "MissingGapsError",
    "RegretLedger",
    "BernoulliEnv",
    "DriftingConstrainedEnv",
    "Environment",
    "FixedSequenceEnv",
    "WalkTrace",
    "arm_flipping_sequence",
    "dekel_conditioned_sequence",
    "dekel_sequence",
    "dyadic_level",
    "dyadic_parent",
    "multiscale_walk_batch",
    "uniform_gaps",
    "walk_sigma",
    "SimplexDistribution",
    "eta_schedule",
    "importance_weighted_estimate",
    "tsallis_distribution",
    "tsallis_objective",
    "AggregateResult",
    "EpisodeResult",
    "GridPointResult",
    "SlopeFit",
    "SweepConfig",
    "build_environment",
    "build_policy",
    "derive_episode_seed",
    "fit_loglog_slope",
    "run_episode",
    "run_sweep",
    "ConstantArm",
    "MiniBatchedTsallisInf",
    "Policy",
    "TsallisInf",
    "TwoPhaseTsallis",
    "UniformRandom",
    "block_size",
    "switch_threshold",
]
