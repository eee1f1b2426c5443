import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exact_estimator_expectation, ftrl_objective, grid_oracle_k2
from switching_bandits import (
    eta_schedule,
    importance_weighted_estimate,
    tsallis_distribution,
    tsallis_objective,
)


class TestEtaSchedule:
    @pytest.mark.parametrize("t,expected", [(1, 2.0), (4, 1.0), (100, 0.2)])
    def test_values(self, t, expected):
        assert eta_schedule(t) == pytest.approx(expected, rel=1e-15)

    def test_rejects_round_zero(self):
        with pytest.raises(ValueError):
            eta_schedule(0)


class TestTsallisDistribution:
    def test_symmetric_two_arms(self):
        d = tsallis_distribution(np.zeros(2), 1.3)
        assert d.probs[0] == d.probs[1]
        assert d.probs[0] == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("c", [0.0, 3.0, 117.5])
    def test_constant_estimates_are_uniform(self, c):
        d = tsallis_distribution(np.full(4, c), 0.7)
        assert np.all(d.probs == d.probs[0])
        assert d.probs[0] == pytest.approx(0.25, abs=1e-12)

    def test_matches_grid_oracle(self):
        # Frozen instance: K=2, L=(0,10), eta=1. The 1e-5 grid oracle puts
        # p1 at 0.97235; the solver must land within 1e-4 per coordinate.
        L = np.array([0.0, 10.0])
        point, value = grid_oracle_k2(L, 1.0, step=1e-5)
        assert point[0] == pytest.approx(0.97235, abs=1e-9)
        d = tsallis_distribution(L, 1.0)
        assert np.max(np.abs(d.probs - point)) <= 1e-4
        assert tsallis_objective(d.probs, L, 1.0) <= value + 1e-6

    def test_shift_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            K = int(rng.integers(2, 6))
            L = rng.random(K) * 50.0
            eta = float(rng.uniform(0.05, 2.0))
            base = tsallis_distribution(L, eta)
            shift = float(rng.uniform(0.0, 100.0))
            moved = tsallis_distribution(L + shift, eta)
            assert np.max(np.abs(base.probs - moved.probs)) <= 1e-10
            assert moved.multiplier == pytest.approx(
                base.multiplier - shift, abs=1e-7, rel=1e-7
            )

    def test_monotone_in_estimates(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            K = int(rng.integers(2, 7))
            L = np.round(rng.random(K) * 30.0, 3)
            eta = float(rng.uniform(0.05, 2.0))
            p = tsallis_distribution(L, eta).probs
            for i in range(K):
                for j in range(K):
                    if L[i] < L[j]:
                        assert p[i] > p[j]
                    elif L[i] == L[j]:
                        assert abs(p[i] - p[j]) <= 1e-12

    def test_warm_start_agrees_with_cold(self):
        L = np.array([1.0, 4.0, 0.5])
        eta = 0.8
        cold = tsallis_distribution(L, eta)
        warm = tsallis_distribution(L, eta, warm_start=cold.multiplier + 0.3)
        assert np.max(np.abs(cold.probs - warm.probs)) <= 1e-10
        # An infeasible warm start must be ignored, not crash.
        silly = tsallis_distribution(L, eta, warm_start=-1e12)
        assert np.max(np.abs(cold.probs - silly.probs)) <= 1e-10

    def test_normalization_over_random_instances(self):
        # 1e5 random (L, eta) pairs with L in [0, 1e4], eta in [1e-3, 2]:
        # probabilities sum to 1 within 1e-9 and are strictly positive.
        rng = np.random.default_rng(7)
        n = 100_000
        worst = 0.0
        for _ in range(n):
            K = int(rng.integers(2, 6))
            L = rng.random(K) * 1e4
            eta = float(rng.uniform(1e-3, 2.0))
            p = tsallis_distribution(L, eta).probs
            assert p.min() > 0.0
            worst = max(worst, abs(float(p.sum()) - 1.0))
        assert worst <= 1e-9

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            tsallis_distribution(np.array([0.0, np.nan]), 1.0)
        with pytest.raises(ValueError):
            tsallis_distribution(np.array([0.0, np.inf]), 1.0)
        with pytest.raises(ValueError):
            tsallis_distribution(np.array([0.0, -1.0]), 1.0)
        with pytest.raises(ValueError):
            tsallis_distribution(np.zeros(2), 0.0)

    @settings(max_examples=300, deadline=None)
    @given(
        L=st.lists(
            st.floats(min_value=0.0, max_value=1e4, allow_nan=False),
            min_size=2,
            max_size=8,
        ),
        eta=st.floats(min_value=1e-3, max_value=2.0),
    )
    def test_output_is_a_distribution(self, L, eta):
        p = tsallis_distribution(np.array(L), eta).probs
        assert abs(float(p.sum()) - 1.0) <= 1e-9
        assert p.min() > 0.0


class TestImportanceWeightedEstimate:
    def test_formula(self):
        est = importance_weighted_estimate(0.5, np.array([0.75, 0.25]), 1)
        assert est[1] == pytest.approx(2.0)
        assert est[0] == 0.0

    def test_zero_loss(self):
        est = importance_weighted_estimate(0.0, np.array([0.5, 0.5]), 0)
        assert np.all(est == 0.0)

    def test_expectation_two_arms(self):
        # p=(0.5,0.5), ell=(0.3,0.7): E[estimate for arm 0] =
        # 0.5*(0.3/0.5) + 0.5*0 = 0.3 by the exact two-outcome sum.
        probs = np.array([0.5, 0.5])
        losses = np.array([0.3, 0.7])
        expectation = exact_estimator_expectation(losses, probs)
        assert expectation[0] == pytest.approx(0.3)
        assert expectation[1] == pytest.approx(0.7)

    def test_unbiased_on_random_cases(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            K = int(rng.integers(2, 9))
            probs = rng.dirichlet(np.ones(K))
            losses = rng.random(K)
            expectation = exact_estimator_expectation(losses, probs)
            assert np.max(np.abs(expectation - losses)) <= 1e-12

    def test_errors(self):
        with pytest.raises(ValueError):
            importance_weighted_estimate(1.5, np.array([0.5, 0.5]), 0)
        with pytest.raises(ValueError):
            importance_weighted_estimate(0.5, np.array([0.5, 0.5]), 2)
        with pytest.raises(ValueError):
            importance_weighted_estimate(0.5, np.array([1.0, 0.0]), 1)
