import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ensemble_incentive.bagging_sim import (
    SimConfig,
    bootstrap_assign,
    precision_curve,
    simulate_ensemble,
    simulate_trial,
    simulate_votes,
    uniform_state,
)
from ensemble_incentive.core_model import LearnerProfile, MechanismState
from ensemble_incentive.surrogate import surrogate_f

FAST = SimConfig(pool_size=2000, trials=5, seed=11)


class TestBootstrap:
    def test_no_data(self):
        draws, union = bootstrap_assign([0, 0, 0], 100, np.random.default_rng(0))
        assert len(union) == 0 and all(len(d) == 0 for d in draws)

    def test_forced_draw(self):
        draws, union = bootstrap_assign([1], 1, np.random.default_rng(0))
        assert union.tolist() == [0] and draws[0].tolist() == [0]

    def test_expected_union_size(self):
        # oracle: P * (1 - (1 - 1/P)^n), checked against 2e5 independent single-learner draws
        pool, n, trials = 10, 10, 200_000
        expected = pool * (1 - (1 - 1 / pool) ** n)
        assert expected == pytest.approx(6.513215599, rel=1e-9)
        rng = np.random.default_rng(5)
        draws = np.sort(rng.integers(0, pool, size=(trials, n)), axis=1)
        distinct = 1 + np.count_nonzero(np.diff(draws, axis=1), axis=1)
        se = distinct.std(ddof=1) / math.sqrt(trials)
        assert abs(distinct.mean() - expected) < 4 * se
        # and the library routine on a smaller sample
        rng = np.random.default_rng(6)
        sizes = [len(bootstrap_assign([n], pool, rng)[1]) for _ in range(20_000)]
        assert abs(np.mean(sizes) - expected) < 4 * np.std(sizes) / math.sqrt(len(sizes))

    @given(st.lists(st.integers(0, 50), max_size=6), st.integers(1, 200), st.integers(0, 1000))
    def test_union_is_distinct_draws(self, sizes, pool, seed):
        draws, union = bootstrap_assign(sizes, pool, np.random.default_rng(seed))
        assert [len(d) for d in draws] == sizes
        everything = np.concatenate(draws) if draws else np.empty(0)
        assert set(union.tolist()) == set(everything.tolist())
        assert len(union) <= min(pool, sum(sizes))
        assert np.all((union >= 0) & (union < pool))


class TestPrecisionCurve:
    def test_zero_data_is_chance(self):
        assert precision_curve(SimConfig(), 0) == pytest.approx(0.1)

    def test_asymptote(self):
        assert precision_curve(SimConfig(), 1e9) == pytest.approx(0.97)

    def test_at_kappa(self):
        expected = 0.1 + 0.87 * (1 - math.exp(-1))
        assert precision_curve(SimConfig(), 800) == pytest.approx(expected, rel=1e-9)
        assert expected == pytest.approx(0.650, abs=5e-4)

    @given(st.floats(0, 1e5), st.floats(0, 1e5))
    def test_monotone(self, d1, d2):
        lo, hi = sorted((d1, d2))
        assert precision_curve(SimConfig(), lo) <= precision_curve(SimConfig(), hi)


class TestVoting:
    def test_binary_majority_of_three(self):
        # oracle: P(at most one of three wrong) for iid errors
        eps = 0.2
        expected = 1 - (3 * eps**2 * (1 - eps) + eps**3)
        assert expected == pytest.approx(0.896, rel=1e-12)
        cfg = SimConfig(n_classes=2, difficulty_alpha=None, difficulty_beta=None)
        m = 200_000
        cols = [np.arange(m)] * 3
        _, acc = simulate_votes(np.full(3, 1 - eps), cols, m, cfg, np.random.default_rng(1))
        se = math.sqrt(expected * (1 - expected) / m)
        assert abs(acc - expected) < 4 * se

    def test_plurality_with_many_classes(self):
        # oracle: exhaustive enumeration for 2 learners, K classes, ties split evenly
        k, p = 4, 0.6
        expected = p * p + 2 * p * (1 - p) * 0.5
        cfg = SimConfig(n_classes=k, difficulty_alpha=None, difficulty_beta=None)
        m = 200_000
        _, acc = simulate_votes(np.full(2, p), [np.arange(m)] * 2, m, cfg, np.random.default_rng(2))
        assert abs(acc - expected) < 4 * math.sqrt(expected * (1 - expected) / m)

    def test_perfect_ensemble(self):
        cfg = SimConfig(pool_size=500, p_max=1.0, kappa=1e-9, trials=3)
        profiles, state = uniform_state(4, 100)
        out, _ = simulate_trial(profiles, state, cfg, np.random.default_rng(0))
        assert out.true_accuracy == 1.0
        assert not out.fault_counts.any()
        assert surrogate_f(out) == 0.0

    def test_single_learner_matches_precision(self):
        cfg = SimConfig(trials=10, seed=3)
        profiles, state = uniform_state(1, 5000)
        s = simulate_ensemble(profiles, state, cfg)
        p = precision_curve(cfg, 5000)
        assert abs(s.true_accuracy - p) < 0.01
        assert s.surrogate == pytest.approx(s.mean_precision)


class TestSimulateEnsemble:
    def test_no_participants(self):
        profiles = [LearnerProfile(i, 0.5, 0.5) for i in range(3)]
        state = MechanismState(np.zeros(3), np.full(3, 100.0))
        s = simulate_ensemble(profiles, state, FAST)
        assert s.n_participants == 0
        assert s.true_accuracy == pytest.approx(0.1)
        assert s.surrogate == 0.0

    def test_only_paid_learners_count(self):
        profiles = [LearnerProfile(i, 0.5, 0.5) for i in range(4)]
        state = MechanismState([100.0, 99.0, 100.0, 0.0], [100.0, 100.0, 100.0, 0.0])
        out, _ = simulate_trial(profiles, state, FAST, np.random.default_rng(0))
        assert out.n_participants == 2

    def test_deterministic(self):
        profiles, state = uniform_state(5, 300)
        a = simulate_ensemble(profiles, state, FAST, keep_outcomes=True)
        b = simulate_ensemble(profiles, state, FAST, keep_outcomes=True)
        assert a.true_accuracy == b.true_accuracy and a.surrogate == b.surrogate
        for x, y in zip(a.outcomes, b.outcomes):
            assert np.array_equal(x.fault_counts, y.fault_counts)
            assert np.array_equal(x.precisions, y.precisions)

    def test_standard_errors(self):
        profiles, state = uniform_state(5, 300)
        s = simulate_ensemble(profiles, state, FAST, keep_outcomes=True)
        acc = [o.true_accuracy for o in s.outcomes]
        assert s.true_accuracy == pytest.approx(np.mean(acc), rel=1e-12)
        assert s.true_accuracy_se == pytest.approx(np.std(acc, ddof=1) / math.sqrt(len(acc)), rel=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 400), st.integers(0, 10**6))
    def test_outcome_invariants(self, n, d, seed):
        profiles, state = uniform_state(n, d)
        out, matrix = simulate_trial(profiles, state, FAST, np.random.default_rng(seed))
        assert out.n_participants == n
        assert 0 < out.union_size <= min(n * d, FAST.pool_size)
        assert np.all((out.fault_counts >= 0) & (out.fault_counts <= n))
        assert 0 <= out.true_accuracy <= 1
        assert np.all((out.precisions >= 0) & (out.precisions <= 1))
        assert np.array_equal(matrix.fault_counts, out.fault_counts)

    def test_more_data_helps(self):
        cfg = SimConfig(trials=20, seed=4)
        small = simulate_ensemble(*uniform_state(10, 200), cfg)
        large = simulate_ensemble(*uniform_state(10, 1000), cfg)
        assert large.true_accuracy > small.true_accuracy + 3 * math.hypot(small.true_accuracy_se, large.true_accuracy_se)


class TestStatisticalProperties:
    def test_majority_beats_average_member(self):
        cfg = SimConfig(n_classes=2, difficulty_alpha=None, difficulty_beta=None)
        p = np.array([0.6, 0.7, 0.75, 0.8, 0.65])
        m = 50_000
        _, acc = simulate_votes(p, [np.arange(m)] * 5, m, cfg, np.random.default_rng(9))
        assert acc > p.mean()

    def test_own_accuracy_tracks_learning_curve(self):
        cfg = SimConfig(trials=40, seed=2)
        profiles, state = uniform_state(3, 600)
        s = simulate_ensemble(profiles, state, cfg)
        p = precision_curve(cfg, 600)
        assert abs(s.mean_precision - p) < 3 * s.mean_precision_se + 1e-9

    def test_difficulty_correlates_errors(self):
        # shared difficulty raises the double-fault rate above the independent-error level
        cfg = SimConfig(trials=10, seed=1)
        flat = SimConfig(trials=10, seed=1, difficulty_alpha=None, difficulty_beta=None)
        profiles, state = uniform_state(10, 400)
        assert simulate_ensemble(profiles, state, cfg).surrogate > simulate_ensemble(profiles, state, flat).surrogate
