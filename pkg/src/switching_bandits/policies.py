"""Bandit policies behind a uniform act/observe interface.

Every policy is used the same way, once per episode:

    arm = policy.act(rng)      # sample and commit this round's arm
    policy.observe(arm, loss)  # feed back the observed loss of that arm

``act`` and ``observe`` must strictly alternate; the base class enforces it.
Arm sampling is inverse-CDF over ascending arm index, so traces are
reproducible from the RNG stream alone.

Policies
--------
TsallisInf
    FTRL with the square-root Tsallis regularizer and learning rate
    2/sqrt(t), updated with unclipped importance-weighted loss estimates.
MiniBatchedTsallisInf
    The same learner run over fixed-size blocks: one arm is committed per
    block and the update uses the block's average loss, cutting switches to
    at most one per block.
TwoPhaseTsallis
    Plays TsallisInf until its own switch count reaches the budget
    K^(1/3) * (T / lam)^(2/3), then restarts fresh as a mini-batched learner
    with block size ceil(lam^(2/3) * K^(-1/3) * T^(1/3)) for the remaining
    rounds. The switch budget is what an adversarial-regime learner would
    spend anyway, so staying below it costs nothing in friendly environments
    while crossing it reveals an adversarial one.
ConstantArm, UniformRandom
    Baselines for oracle tests and paired comparisons.
"""
from __future__ import annotations

import math

import numpy as np

from .accounting import PHASE_ONE, PHASE_TWO
from .ftrl import SimplexDistribution, eta_schedule, tsallis_distribution

__all__ = [
    "Policy",
    "TsallisInf",
    "MiniBatchedTsallisInf",
    "TwoPhaseTsallis",
    "ConstantArm",
    "UniformRandom",
    "switch_threshold",
    "block_size",
    "sample_arm",
]


def switch_threshold(T: int, K: int, lam: float) -> float:
    """Switch budget K^(1/3) * (T / lam)^(2/3); +inf when lam == 0."""
    if lam < 0.0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if T < 1 or K < 1:
        raise ValueError(f"need T >= 1 and K >= 1, got T={T}, K={K}")
    if lam == 0.0:
        return math.inf
    return K ** (1.0 / 3.0) * (T / lam) ** (2.0 / 3.0)


def block_size(T: int, K: int, lam: float) -> int:
    """Block length ceil(lam^(2/3) * K^(-1/3) * T^(1/3)), at least 1."""
    if T < 1 or K < 1:
        raise ValueError(f"need T >= 1 and K >= 1, got T={T}, K={K}")
    if lam <= 0.0:
        raise ValueError("block size is undefined for lam <= 0")
    value = lam ** (2.0 / 3.0) * K ** (-1.0 / 3.0) * T ** (1.0 / 3.0)
    # Guard against ceil(8.000000000000002) = 9 from float round-off.
    return max(1, math.ceil(value - 1e-12))


def sample_arm(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF sample over ascending arm index using one uniform.

    Returns the first arm whose running probability sum exceeds the uniform
    draw; left-to-right accumulation keeps traces platform-independent.
    """
    u = rng.random()
    acc = 0.0
    last = probs.shape[0] - 1
    for arm in range(last):
        acc += probs[arm]
        if u < acc:
            return arm
    return last


class Policy:
    """Base class enforcing the act/observe alternation contract."""

    phase: int = PHASE_ONE

    def __init__(self, K: int) -> None:
        if K < 2:
            raise ValueError(f"K must be >= 2, got {K}")
        self.K = K
        self._pending_arm: int | None = None

    def act(self, rng: np.random.Generator) -> int:
        if self._pending_arm is not None:
            raise RuntimeError("act called twice without an observe in between")
        arm = self._act(rng)
        self._pending_arm = arm
        return arm

    def observe(self, arm: int, loss: float) -> None:
        if self._pending_arm is None:
            raise RuntimeError("observe called before act")
        if arm != self._pending_arm:
            raise ValueError(
                f"observed arm {arm} does not match the acted arm {self._pending_arm}"
            )
        self._pending_arm = None
        self._observe(arm, float(loss))

    def _act(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def _observe(self, arm: int, loss: float) -> None:
        raise NotImplementedError


class TsallisInf(Policy):
    """Tsallis-entropy FTRL with importance-weighted updates (Tsallis-INF)."""

    def __init__(self, K: int) -> None:
        super().__init__(K)
        self.t = 1
        self.estimates = np.zeros(K, dtype=np.float64)
        self.switch_count = 0
        self.last_arm: int | None = None
        self.distribution: SimplexDistribution | None = None
        self._warm: float | None = None

    def _act(self, rng: np.random.Generator) -> int:
        dist = tsallis_distribution(
            self.estimates, eta_schedule(self.t), warm_start=self._warm
        )
        self.distribution = dist
        self._warm = dist.multiplier
        return sample_arm(dist.probs, rng)

    def _observe(self, arm: int, loss: float) -> None:
        # Importance-weighted update: only the played arm's estimate moves.
        self.estimates[arm] += loss / float(self.distribution.probs[arm])
        if self.last_arm is not None and arm != self.last_arm:
            self.switch_count += 1
        self.last_arm = arm
        self.t += 1


class MiniBatchedTsallisInf(Policy):
    """Tsallis-INF over constant-size blocks of committed plays.

    The learner commits one arm per block and plays it ``block_len`` times;
    the FTRL update is applied once per block with the importance-weighted
    block-average loss. When the horizon is not divisible by the block size
    the final block is shorter and its estimate averages over the actual
    length, which keeps the block-mean estimator unbiased.
    """

    def __init__(self, K: int, block_len: int, horizon: int) -> None:
        super().__init__(K)
        if block_len < 1:
            raise ValueError(f"block_len must be >= 1, got {block_len}")
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        self.block_len = block_len
        self.horizon = horizon
        self.n = 1  # block index
        self.estimates = np.zeros(K, dtype=np.float64)
        self.block_arm: int | None = None
        self.distribution: SimplexDistribution | None = None
        self._pos = 0
        self._acc = 0.0
        self._rounds_left = horizon
        self._cur_len = 0
        self._warm: float | None = None

    def _act(self, rng: np.random.Generator) -> int:
        if self._rounds_left <= 0:
            raise RuntimeError("policy horizon exhausted")
        if self._pos == 0:
            dist = tsallis_distribution(
                self.estimates, eta_schedule(self.n), warm_start=self._warm
            )
            self.distribution = dist
            self._warm = dist.multiplier
            self.block_arm = sample_arm(dist.probs, rng)
            self._cur_len = min(self.block_len, self._rounds_left)
        return self.block_arm

    def _observe(self, arm: int, loss: float) -> None:
        self._acc += loss
        self._pos += 1
        self._rounds_left -= 1
        if self._pos == self._cur_len:
            avg = self._acc / self._cur_len
            self.estimates[arm] += avg / float(self.distribution.probs[arm])
            self.n += 1
            self._pos = 0
            self._acc = 0.0


class TwoPhaseTsallis(Policy):
    """Switch-budgeted controller: Tsallis-INF, then mini-batched restart.

    Phase 1 runs plain Tsallis-INF and stops the first time its switch count
    reaches ``switch_threshold(T, K, lam)``; with ``lam == 0`` the budget is
    infinite and phase 2 never triggers. Phase 2 starts a fresh mini-batched
    learner (estimates zeroed, block index restarting at 1) with block size
    ``block_size(T, K, lam)`` computed from the full horizon, run over the
    remaining rounds. Nothing carries over except the clock, so the first
    block's distribution is exactly uniform.
    """

    def __init__(
        self,
        T: int,
        K: int,
        lam: float,
        block_len: int | None = None,
    ) -> None:
        super().__init__(K)
        if T < 1:
            raise ValueError(f"T must be >= 1, got {T}")
        self.T = T
        self.lam = lam
        self.threshold = switch_threshold(T, K, lam)
        self._block_override = block_len
        self.phase = PHASE_ONE
        self.inner = TsallisInf(K)
        self.batch: MiniBatchedTsallisInf | None = None
        self.rounds_played = 0
        self.break_round: int | None = None

    @property
    def phase1_switches(self) -> int:
        return self.inner.switch_count

    def _act(self, rng: np.random.Generator) -> int:
        if self.phase == PHASE_ONE:
            return self.inner.act(rng)
        return self.batch.act(rng)

    def _observe(self, arm: int, loss: float) -> None:
        if self.phase == PHASE_ONE:
            self.inner.observe(arm, loss)
            self.rounds_played += 1
            if (
                self.inner.switch_count >= self.threshold
                and self.rounds_played < self.T
            ):
                self.break_round = self.rounds_played
                self.phase = PHASE_TWO
                B = (
                    self._block_override
                    if self._block_override is not None
                    else block_size(self.T, self.K, self.lam)
                )
                self.batch = MiniBatchedTsallisInf(
                    self.K, B, horizon=self.T - self.rounds_played
                )
        else:
            self.batch.observe(arm, loss)
            self.rounds_played += 1


class ConstantArm(Policy):
    """Plays one fixed arm every round."""

    def __init__(self, K: int, arm: int) -> None:
        super().__init__(K)
        if not 0 <= arm < K:
            raise ValueError(f"arm {arm} out of range for K={K}")
        self.arm = arm

    def _act(self, rng: np.random.Generator) -> int:
        return self.arm

    def _observe(self, arm: int, loss: float) -> None:
        pass


class UniformRandom(Policy):
    """Plays a uniformly random arm every round."""

    def _act(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.K))

    def _observe(self, arm: int, loss: float) -> None:
        pass
