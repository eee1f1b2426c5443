"""Regret and switch accounting shared by every experiment.

Arms are 0-based indices into length-K loss vectors. A loss vector holds one
value per arm, each in [0, 1]; the player only ever observes the entry of the
arm it pulled, but the full vector is recorded here so realized regret against
the best fixed arm in hindsight can be computed.

Switch convention: no switch is charged on the first round. The switch count
after t rounds is the number of rounds s in {2, ..., t} whose arm differs from
the arm of round s - 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExperimentParams",
    "GapSpec",
    "RegretLedger",
    "EpisodeTrace",
    "MissingGapsError",
    "validate_loss_vector",
]

PHASE_ONE = 1
PHASE_TWO = 2


class MissingGapsError(ValueError):
    """Pseudo-regret was requested but no gap specification was recorded.

    Raised by quantities that are only defined when the environment announces
    per-arm expected-loss gaps. Callers should fall back to realized regret.
    """


@dataclass(frozen=True)
class ExperimentParams:
    """Immutable description of one episode: horizon, arms, switch price, seed.

    Parameters
    ----------
    T : int
        Number of rounds, at least K.
    K : int
        Number of arms, at least 2.
    lam : float
        Cost charged per arm switch, non-negative. ``lam=0`` recovers the
        vanilla bandit objective.
    seed : int
        64-bit seed from which the episode's RNG streams are derived.
    """

    T: int
    K: int
    lam: float
    seed: int

    def __post_init__(self) -> None:
        if self.K < 2:
            raise ValueError(f"K must be >= 2, got {self.K}")
        if self.T < self.K:
            raise ValueError(f"T must be >= K, got T={self.T}, K={self.K}")
        if not (self.lam >= 0.0):
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")


def validate_loss_vector(values: np.ndarray, K: int) -> np.ndarray:
    """Check shape (K,) and entries in [0, 1]; returns the array as float64."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (K,):
        raise ValueError(f"loss vector must have shape ({K},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("loss vector has non-finite entries")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("loss vector entries must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class GapSpec:
    """Per-arm expected-loss gaps to a unique best arm.

    ``gaps[i]`` is the expected excess loss of arm i over the best arm each
    round; exactly one entry (the best arm's) is zero. ``delta_min`` is the
    smallest nonzero gap.
    """

    best_arm: int
    gaps: np.ndarray

    def __post_init__(self) -> None:
        gaps = np.asarray(self.gaps, dtype=np.float64)
        gaps.setflags(write=False)
        object.__setattr__(self, "gaps", gaps)
        K = gaps.shape[0]
        if not 0 <= self.best_arm < K:
            raise ValueError(f"best_arm {self.best_arm} out of range for K={K}")
        if np.any(gaps < 0.0):
            raise ValueError("gaps must be non-negative")
        zero = np.flatnonzero(gaps == 0.0)
        if zero.shape != (1,) or zero[0] != self.best_arm:
            raise ValueError("exactly the best arm must have gap zero")

    @property
    def K(self) -> int:
        return int(self.gaps.shape[0])

    @property
    def delta_min(self) -> float:
        others = np.delete(self.gaps, self.best_arm)
        return float(others.min())


@dataclass
class RegretLedger:
    """Running regret, per-arm loss sums and switch count for one episode.

    One ledger per episode; ``record_step`` is called once per round with the
    full loss vector of that round. Loss vectors are assumed valid (entries in
    [0, 1]); use :func:`validate_loss_vector` at trust boundaries.
    """

    K: int
    cumulative_player_loss: float = 0.0
    per_arm_loss: np.ndarray = field(init=False)
    pseudo_regret: float = 0.0
    switch_count: int = 0
    last_arm: int | None = None
    rounds: int = 0
    _pseudo_valid: bool = True

    def __post_init__(self) -> None:
        self.per_arm_loss = np.zeros(self.K, dtype=np.float64)

    def record_step(
        self,
        arm: int,
        loss_vector: np.ndarray,
        gaps: GapSpec | None = None,
    ) -> "RegretLedger":
        """Accumulate one round: player loss, per-arm sums, switches, gaps."""
        if not 0 <= arm < self.K:
            raise ValueError(f"arm {arm} out of range for K={self.K}")
        self.cumulative_player_loss += float(loss_vector[arm])
        self.per_arm_loss += loss_vector
        if self.last_arm is not None and arm != self.last_arm:
            self.switch_count += 1
        self.last_arm = arm
        if gaps is not None:
            self.pseudo_regret += float(gaps.gaps[arm])
        else:
            self._pseudo_valid = False
        self.rounds += 1
        return self

    @property
    def has_gaps(self) -> bool:
        """True when every recorded round carried a gap specification."""
        return self._pseudo_valid and self.rounds > 0

    def realized_regret(self) -> float:
        """Player loss minus the best fixed arm's loss in hindsight.

        May be negative for a lucky player on stochastic losses.
        """
        return self.cumulative_player_loss - float(self.per_arm_loss.min())

    def switching_cost_regret(self, lam: float) -> float:
        """Pseudo-regret plus ``lam`` times the switch count.

        Raises
        ------
        MissingGapsError
            If any recorded round lacked gaps, so pseudo-regret is undefined.
            Callers should use :meth:`realized_switching_cost_regret` instead.
        """
        if lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {lam}")
        if not self.has_gaps:
            raise MissingGapsError(
                "pseudo-regret undefined without a gap specification"
            )
        return self.pseudo_regret + lam * self.switch_count

    def realized_switching_cost_regret(self, lam: float) -> float:
        """Realized regret plus ``lam`` times the switch count."""
        if lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {lam}")
        return self.realized_regret() + lam * self.switch_count


@dataclass
class EpisodeTrace:
    """Per-round record of one seeded episode plus the final ledger.

    Column ``regret`` holds the running pseudo-regret when the environment
    announced gaps, and the running realized regret otherwise (flagged by
    ``has_gaps``). ``scr`` is that column plus ``lam`` times the running
    switch count. Phases are 1 before a two-phase policy breaks and 2 after;
    policies without phases are all 1.
    """

    lam: float
    arms: np.ndarray
    losses: np.ndarray
    phases: np.ndarray
    switches: np.ndarray
    regret: np.ndarray
    scr: np.ndarray
    ledger: RegretLedger
    has_gaps: bool
    break_round: int | None = None

    @property
    def T(self) -> int:
        return int(self.arms.shape[0])

    def check(self) -> None:
        """Validate structural invariants; raises AssertionError on breakage."""
        T = self.T
        for name in ("losses", "phases", "switches", "regret", "scr"):
            assert getattr(self, name).shape == (T,), f"{name} length mismatch"
        assert np.all(np.diff(self.phases) >= 0), "phase tags must not decrease"
        changes = np.count_nonzero(self.arms[1:] != self.arms[:-1])
        assert changes == self.ledger.switch_count, "switch count mismatch"
        assert self.ledger.rounds == T, "ledger round count mismatch"
