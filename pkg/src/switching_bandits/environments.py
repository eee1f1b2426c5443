"""Loss-sequence generators: i.i.d., drifting, fixed, and walk adversaries.

All environments are oblivious: the losses they emit are a pure function of
the seed and the parameters, never of the player's actions. Each exposes

    next_loss(t, rng) -> np.ndarray   # the length-K loss vector of round t
    gaps() -> GapSpec | None          # expected per-arm gaps, if defined

plus ``sample_matrix(T, rng)`` which materializes all T rounds at once while
consuming the RNG stream exactly as T sequential ``next_loss`` calls would.

The hardest generator is the multi-scale Gaussian walk of Dekel, Ding,
Koren and Peres (the T^(2/3) switching-cost lower bound): a random process
X_t = X_{r(t)} + n_t whose parent r(t) clears the lowest set bit of t, so
Var(X_t) = popcount(t) * sigma^2 and nearby rounds are highly correlated.
All arms share the loss X_t + 1/2 except a hidden best arm, which is better
by delta; values are clipped to [0, 1]. Conditioning the walk on staying
inside [-1/3, 1/3] (rejection sampling) removes clipping entirely, making
the per-round expected gap exactly delta every round.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .accounting import GapSpec

__all__ = [
    "Environment",
    "BernoulliEnv",
    "DriftingConstrainedEnv",
    "FixedSequenceEnv",
    "WalkTrace",
    "dyadic_level",
    "dyadic_parent",
    "walk_sigma",
    "multiscale_walk_batch",
    "dekel_sequence",
    "dekel_conditioned_sequence",
    "arm_flipping_sequence",
    "uniform_gaps",
]


def uniform_gaps(K: int, delta: float, best_arm: int = 0) -> GapSpec:
    """GapSpec with one best arm and every other arm at gap ``delta``."""
    gaps = np.full(K, float(delta))
    gaps[best_arm] = 0.0
    return GapSpec(best_arm=best_arm, gaps=gaps)


class Environment:
    """Oblivious loss-vector source; see the module docstring."""

    K: int

    def next_loss(self, t: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def gaps(self) -> GapSpec | None:
        return None

    def sample_matrix(self, T: int, rng: np.random.Generator) -> np.ndarray:
        """All T loss vectors, stream-equivalent to T next_loss calls."""
        return np.stack([self.next_loss(t, rng) for t in range(1, T + 1)])


class BernoulliEnv(Environment):
    """I.i.d. Bernoulli losses: best arm mean ``base_mean``, others +gap."""

    def __init__(self, gap_spec: GapSpec, base_mean: float) -> None:
        if base_mean < 0.0:
            raise ValueError(f"base_mean must be >= 0, got {base_mean}")
        means = base_mean + gap_spec.gaps
        if means.max() > 1.0:
            raise ValueError(
                f"largest arm mean {means.max():.6g} exceeds 1; "
                "lower base_mean or the gaps"
            )
        self.K = gap_spec.K
        self._gap_spec = gap_spec
        self._means = means

    def gaps(self) -> GapSpec | None:
        return self._gap_spec

    def next_loss(self, t: int, rng: np.random.Generator) -> np.ndarray:
        return (rng.random(self.K) < self._means).astype(np.float64)

    def sample_matrix(self, T: int, rng: np.random.Generator) -> np.ndarray:
        return (rng.random((T, self.K)) < self._means).astype(np.float64)


class DriftingConstrainedEnv(Environment):
    """Bernoulli losses whose base mean drifts while gaps stay constant.

    Round t draws arm i from Bernoulli(mu_t + gap_i), so the expected gap to
    the best arm equals gap_i exactly every round even though the marginal
    distributions move. The default path is a slow sinusoid,

        mu_t = 0.5 - delta_max / 2 + 0.1 * sin(2 pi t / ceil(T / 10)),

    clamped so every arm mean stays inside [0.05, 0.95]. A custom path is
    validated per round and must keep all means in [0, 1].
    """

    def __init__(
        self,
        gap_spec: GapSpec,
        T: int,
        mean_path: Callable[[int], float] | None = None,
    ) -> None:
        self.K = gap_spec.K
        self._gap_spec = gap_spec
        self._delta_max = float(gap_spec.gaps.max())
        self._custom = mean_path
        if mean_path is None:
            if self._delta_max > 0.9:
                raise ValueError(
                    "default drifting path needs max gap <= 0.9, "
                    f"got {self._delta_max}"
                )
            period = math.ceil(T / 10)
            center = 0.5 - self._delta_max / 2.0
            lo, hi = 0.05, 0.95 - self._delta_max
            self._path = lambda t: min(
                max(center + 0.1 * math.sin(2.0 * math.pi * t / period), lo), hi
            )
        else:
            self._path = mean_path

    def gaps(self) -> GapSpec | None:
        return self._gap_spec

    def _base_mean(self, t: int) -> float:
        mu = float(self._path(t))
        if self._custom is not None and not (
            0.0 <= mu and mu + self._delta_max <= 1.0
        ):
            raise ValueError(
                f"mean path exits the feasible band at round {t}: mu={mu}"
            )
        return mu

    def next_loss(self, t: int, rng: np.random.Generator) -> np.ndarray:
        means = self._base_mean(t) + self._gap_spec.gaps
        return (rng.random(self.K) < means).astype(np.float64)

    def sample_matrix(self, T: int, rng: np.random.Generator) -> np.ndarray:
        mu = np.array([self._base_mean(t) for t in range(1, T + 1)])
        means = mu[:, None] + self._gap_spec.gaps[None, :]
        return (rng.random((T, self.K)) < means).astype(np.float64)


class FixedSequenceEnv(Environment):
    """Replays a prebuilt (T, K) loss matrix; gaps only if supplied."""

    def __init__(self, losses: np.ndarray, gap_spec: GapSpec | None = None) -> None:
        losses = np.asarray(losses, dtype=np.float64)
        if losses.ndim != 2 or losses.shape[1] < 2:
            raise ValueError(f"losses must have shape (T, K>=2), got {losses.shape}")
        if not np.all(np.isfinite(losses)):
            raise ValueError("losses contain non-finite entries")
        if losses.min() < 0.0 or losses.max() > 1.0:
            raise ValueError("losses must lie in [0, 1]")
        self._losses = losses
        self._gap_spec = gap_spec
        self.K = losses.shape[1]

    @property
    def T(self) -> int:
        return int(self._losses.shape[0])

    def gaps(self) -> GapSpec | None:
        return self._gap_spec

    def next_loss(self, t: int, rng: np.random.Generator | None = None) -> np.ndarray:
        if not 1 <= t <= self.T:
            raise IndexError(
                f"round {t} outside the stored sequence of length {self.T}"
            )
        return self._losses[t - 1]

    def sample_matrix(self, T: int, rng: np.random.Generator | None = None) -> np.ndarray:
        if T != self.T:
            raise IndexError(
                f"requested {T} rounds but the stored sequence has {self.T}"
            )
        return self._losses


# ---------------------------------------------------------------------------
# Multi-scale Gaussian walk adversary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WalkTrace:
    """The realized walk behind one generated loss sequence.

    ``noise[t-1]`` is the Gaussian increment n_t and ``walk[t-1]`` the value
    X_t, for t = 1..T; X_0 = 0 is implicit. The recursion
    walk[t-1] == walk[parent-1] + noise[t-1] (with X_0 for parent 0) holds
    bit-for-bit.
    """

    sigma: float
    noise: np.ndarray
    walk: np.ndarray
    best_arm: int
    delta: float


def dyadic_level(t: int) -> int:
    """Largest i >= 0 such that 2^i divides t (the 2-adic valuation)."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    return (t & -t).bit_length() - 1


def dyadic_parent(t: int) -> int:
    """t with its lowest set bit cleared, i.e. t - 2^dyadic_level(t)."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    return t & (t - 1)


def walk_sigma(T: int) -> float:
    """Noise scale 1 / (9 * log2(T)) with the real-valued binary log."""
    if T < 2:
        raise ValueError(f"T must be >= 2, got {T}")
    return 1.0 / (9.0 * math.log2(T))


def _walks_from_noise(noise: np.ndarray) -> np.ndarray:
    """Walk values X_1..X_T for each row of Gaussian increments."""
    count, T = noise.shape
    x = np.zeros((count, T + 1))
    for t in range(1, T + 1):
        x[:, t] = x[:, t & (t - 1)] + noise[:, t - 1]
    return x[:, 1:]


def multiscale_walk_batch(
    T: int,
    count: int,
    rng: np.random.Generator,
    sigma: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` independent walks of length T; returns (noise, walks)."""
    if sigma is None:
        sigma = walk_sigma(T)
    noise = rng.normal(0.0, sigma, size=(count, T))
    return noise, _walks_from_noise(noise)


def _losses_from_walk(
    walk: np.ndarray, K: int, delta: float, best_arm: int
) -> np.ndarray:
    base = walk + 0.5
    losses = np.repeat(base[:, None], K, axis=1)
    losses[:, best_arm] -= delta
    return losses


def dekel_sequence(
    T: int,
    K: int,
    delta: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, WalkTrace, GapSpec | None]:
    """Loss sequence from the multi-scale walk, clipped to [0, 1].

    The best arm is drawn uniformly after the walk. With ``delta == 0`` all
    arms are identical every round and no gap specification is returned (no
    unique best arm exists). Because of clipping, the realized per-round
    expected gap can fall below delta; use the conditioned variant when the
    gap must hold exactly.
    """
    if T < 2:
        raise ValueError(f"T must be >= 2, got {T}")
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    sigma = walk_sigma(T)
    noise = rng.normal(0.0, sigma, size=(1, T))
    walk = _walks_from_noise(noise)[0]
    best_arm = int(rng.integers(K))
    losses = np.clip(_losses_from_walk(walk, K, delta, best_arm), 0.0, 1.0)
    trace = WalkTrace(
        sigma=sigma, noise=noise[0], walk=walk, best_arm=best_arm, delta=delta
    )
    gap_spec = uniform_gaps(K, delta, best_arm) if delta > 0.0 else None
    return losses, trace, gap_spec


def dekel_conditioned_sequence(
    T: int,
    K: int,
    delta: float,
    rng: np.random.Generator,
    max_attempts: int = 1000,
) -> tuple[np.ndarray, WalkTrace, GapSpec | None]:
    """Walk losses conditioned on never leaving the no-clipping band.

    Whole walk realizations are rejection-sampled until X_t stays inside
    [-1/3, 1/3] for every round; with delta <= 1/6 no loss then touches the
    clip boundary, so arm i's loss exceeds the best arm's by exactly delta
    every single round (bitwise exact when delta is a binary fraction such
    as 1/8). Acceptance is overwhelmingly likely: the noise scale is tuned
    so a full walk escapes the band with probability at most about 1/T.
    """
    if not 0.0 <= delta <= 1.0 / 6.0:
        raise ValueError(f"delta must lie in [0, 1/6], got {delta}")
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
    if T < 2:
        raise ValueError(f"T must be >= 2, got {T}")
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    sigma = walk_sigma(T)
    for _ in range(max_attempts):
        noise = rng.normal(0.0, sigma, size=(1, T))
        walk = _walks_from_noise(noise)[0]
        if np.abs(walk).max() <= 1.0 / 3.0:
            best_arm = int(rng.integers(K))
            losses = _losses_from_walk(walk, K, delta, best_arm)
            trace = WalkTrace(
                sigma=sigma,
                noise=noise[0],
                walk=walk,
                best_arm=best_arm,
                delta=delta,
            )
            gap_spec = uniform_gaps(K, delta, best_arm) if delta > 0.0 else None
            return losses, trace, gap_spec
    raise RuntimeError(
        f"no walk stayed inside the band after {max_attempts} attempts; "
        "this is vanishingly unlikely for T >= 16"
    )


def arm_flipping_sequence(T: int, K: int) -> np.ndarray:
    """Loss matrix whose single zero-loss arm cycles through 0..K-1.

    Round t's best arm is (t - 1) % K, every other arm costs 1. For K = 2
    this is the alternating (0,1)/(1,0) sequence that forces any follower to
    switch nearly every round.
    """
    if T < 1 or K < 2:
        raise ValueError(f"need T >= 1 and K >= 2, got T={T}, K={K}")
    losses = np.ones((T, K))
    rows = np.arange(T)
    losses[rows, rows % K] = 0.0
    return losses
