"""Exact Tsallis-entropy FTRL distributions on the probability simplex.

Each round the sampling distribution is the minimizer over the simplex of

    f(p) = sum_i L_i * p_i - (4 / eta) * sum_i sqrt(p_i)

where L is the vector of cumulative importance-weighted loss estimates and
eta is the round's learning rate. The square-root regularizer is the 1/2
Tsallis entropy used by Tsallis-INF (Zimmert and Seldin); its gradient
diverges at the simplex boundary, so the minimizer has every coordinate
strictly positive.

Stationarity gives the closed form

    p_i = 4 / (eta * (L_i + x))^2,   with L_i + x > 0 for all i,

where x is the Lagrange multiplier of the normalization constraint. Solving
for x means finding the unique root of

    g(x) = sum_i 4 / (eta * (L_i + x))^2 - 1,

which is strictly decreasing and convex on the feasible ray x > -min_i L_i.
Both p_max <= 1 and p_max >= 1/K apply to the arm with the smallest L, which
brackets the root inside

    [2 / eta - min_i L_i,  2 * sqrt(K) / eta - min_i L_i],

with g >= 0 at the left end and g <= 0 at the right end. Newton iteration is
started at the right end (or a feasible warm start) and safeguarded by
bisection whenever a step would leave the bracket.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SimplexDistribution",
    "eta_schedule",
    "tsallis_distribution",
    "tsallis_objective",
    "importance_weighted_estimate",
]

_G_TOL = 1e-12
_NEWTON_MAX_ITER = 100
_BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class SimplexDistribution:
    """A solved sampling distribution and its normalization multiplier.

    ``multiplier`` is the root x described in the module docstring; callers
    feed it back as ``warm_start`` for the next round's solve.
    """

    probs: np.ndarray
    multiplier: float


def eta_schedule(t: int) -> float:
    """Learning rate for round t >= 1, equal to 2 / sqrt(t)."""
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    return 2.0 / math.sqrt(t)


def tsallis_objective(probs: np.ndarray, estimates: np.ndarray, eta: float) -> float:
    """Value of the FTRL objective f(p) at a point of the simplex."""
    return float(estimates @ probs - (4.0 / eta) * np.sum(np.sqrt(probs)))


def tsallis_distribution(
    estimates: np.ndarray,
    eta: float,
    warm_start: float | None = None,
) -> SimplexDistribution:
    """Minimize the FTRL objective over the simplex for the given estimates.

    Parameters
    ----------
    estimates : np.ndarray
        Cumulative loss estimates, finite and non-negative, shape (K,).
    eta : float
        Learning rate, positive.
    warm_start : float, optional
        Previous round's multiplier. Used as the Newton starting point when
        it lies inside the feasible bracket, otherwise ignored.

    Raises
    ------
    ValueError
        On non-finite input or non-positive eta.
    RuntimeError
        If the root is not located even after the bisection fallback, which
        signals numeric corruption upstream.
    """
    L = np.asarray(estimates, dtype=np.float64)
    L_min = float(L.min())
    # For a non-negative array, a finite sum certifies every entry finite;
    # NaN anywhere also fails the min comparison below.
    if not (L_min >= 0.0 and math.isfinite(float(L.sum()))):
        raise ValueError("estimates must be finite and non-negative")
    if not (eta > 0.0 and math.isfinite(eta)):
        raise ValueError(f"eta must be positive and finite, got {eta}")

    K = L.shape[0]
    c = 4.0 / (eta * eta)

    # Bracket from p_max in [1/K, 1] for the smallest-estimate arm.
    lo = 2.0 / eta - L_min          # g(lo) >= 0
    hi = 2.0 * math.sqrt(K) / eta - L_min  # g(hi) <= 0

    x = hi
    if warm_start is not None and lo < warm_start < hi:
        x = float(warm_start)

    converged = False
    inv2 = None
    for _ in range(_NEWTON_MAX_ITER):
        inv = 1.0 / (L + x)
        inv2 = inv * inv
        g = c * float(inv2.sum()) - 1.0
        if abs(g) <= _G_TOL:
            converged = True
            break
        if g > 0.0:
            lo = x
        else:
            hi = x
        slope = -2.0 * c * float((inv2 * inv).sum())
        x_new = x - g / slope
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new

    if not converged:
        for _ in range(_BISECT_MAX_ITER):
            inv = 1.0 / (L + x)
            inv2 = inv * inv
            g = c * float(inv2.sum()) - 1.0
            if abs(g) <= _G_TOL:
                converged = True
                break
            if g > 0.0:
                lo = x
            else:
                hi = x
            mid = 0.5 * (lo + hi)
            if mid == x or hi - lo <= 1e-15 * (1.0 + abs(x)):
                break
            x = mid
        if not converged:
            inv = 1.0 / (L + x)
            inv2 = inv * inv
            g = c * float(inv2.sum()) - 1.0
            if abs(g) > 1e-9:
                raise RuntimeError(
                    f"normalization root not found (|g|={abs(g):.3e}); "
                    "estimates are likely corrupted"
                )

    return SimplexDistribution(probs=c * inv2, multiplier=float(x))


def importance_weighted_estimate(
    loss: float,
    probs: np.ndarray,
    chosen: int,
) -> np.ndarray:
    """Unbiased loss-vector estimate from one bandit observation.

    Entry ``chosen`` is ``loss / probs[chosen]``; every other entry is zero.
    Averaged over ``chosen`` drawn from ``probs`` this recovers the full loss
    vector coordinatewise.
    """
    K = probs.shape[0]
    if not 0 <= chosen < K:
        raise ValueError(f"chosen arm {chosen} out of range for K={K}")
    if not 0.0 <= loss <= 1.0:
        raise ValueError(f"loss must lie in [0, 1], got {loss}")
    p = float(probs[chosen])
    if not p > 0.0:
        raise ValueError("chosen arm has zero probability; state is corrupted")
    est = np.zeros(K, dtype=np.float64)
    est[chosen] = loss / p
    return est
