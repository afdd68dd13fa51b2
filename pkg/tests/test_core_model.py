import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ensemble_incentive.core_model import (
    InputDomainError,
    LearnerProfile,
    MechanismState,
    ServerConfig,
    active_mask,
    communication_cost,
    computation_cost,
    is_active,
    learner_payoff,
    make_population,
    optimal_participation,
)

positive = st.floats(min_value=1e-6, max_value=10.0)
sizes = st.floats(min_value=0.0, max_value=1e5)


def learner(alpha=0.5, beta=0.5, model_size=0.0):
    return LearnerProfile(id=0, alpha=alpha, beta=beta, model_size=model_size)


class TestCosts:
    def test_computation_zero_data(self):
        assert computation_cost(learner(alpha=0.5), 0) == 0

    @pytest.mark.parametrize("alpha,d,expected", [(1e-3, 500, 0.5), (2, 3, 6)])
    def test_computation_hand_values(self, alpha, d, expected):
        assert computation_cost(learner(alpha=alpha), d) == pytest.approx(expected, rel=1e-9)

    def test_communication_zero_data(self):
        assert communication_cost(learner(beta=0.2), 0) == 0

    @pytest.mark.parametrize("beta,d,m,expected", [(1e-4, 1000, 0, 0.1), (0.1, 40, 10, 5)])
    def test_communication_hand_values(self, beta, d, m, expected):
        assert communication_cost(learner(beta=beta, model_size=m), d) == pytest.approx(expected, rel=1e-9)

    def test_negative_size_rejected(self):
        with pytest.raises(InputDomainError):
            computation_cost(learner(), -1)
        with pytest.raises(InputDomainError):
            communication_cost(learner(), -1)

    @given(positive, positive, sizes, sizes)
    def test_costs_linear_and_monotone(self, a, b, d1, d2):
        p = learner(a, b)
        lo, hi = sorted((d1, d2))
        assert computation_cost(p, lo) <= computation_cost(p, hi)
        assert communication_cost(p, lo) <= communication_cost(p, hi)
        assert computation_cost(p, lo + hi) == pytest.approx(
            computation_cost(p, lo) + computation_cost(p, hi), rel=1e-12, abs=1e-12
        )


class TestPayoff:
    def test_not_participating_is_zero(self):
        assert learner_payoff(learner(), False, 123.0, 45.0) == 0.0

    @pytest.mark.parametrize("reward,expected", [(10, 5), (5, 0)])
    def test_hand_values(self, reward, expected):
        p = learner(0.02, 0.03)
        assert learner_payoff(p, True, reward, 100) == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_negative_reward_rejected(self):
        with pytest.raises(InputDomainError):
            learner_payoff(learner(), True, -1.0, 1.0)


class TestParticipation:
    def test_boundary_participates(self):
        assert optimal_participation(learner(0.02, 0.03), 5, 100)

    def test_strict_branch(self):
        assert not optimal_participation(learner(0.02, 0.03), 4.99, 100)

    def test_zero_everything(self):
        assert optimal_participation(learner(0.3, 0.7), 0, 0)

    def test_zero_data_is_not_active(self):
        assert not is_active(learner(), 0, 0)

    @given(positive, positive, st.floats(0, 1e4), sizes)
    def test_participation_iff_non_negative_payoff(self, a, b, r, d):
        p = learner(a, b)
        joins = optimal_participation(p, r, d)
        assert joins == (r >= (a + b) * d)
        if joins:
            assert learner_payoff(p, True, r, d) >= 0

    def test_active_mask_excludes_zero_data(self):
        profiles = [LearnerProfile(i, 0.1, 0.1) for i in range(3)]
        state = MechanismState([0.0, 2.0, 1.0], [0.0, 10.0, 10.0])
        assert active_mask(profiles, state).tolist() == [False, True, False]


class TestTypes:
    @pytest.mark.parametrize("alpha,beta,m", [(0, 1, 0), (1, 0, 0), (1, 1, -1), (math.nan, 1, 0)])
    def test_profile_validation(self, alpha, beta, m):
        with pytest.raises(InputDomainError):
            LearnerProfile(0, alpha, beta, m)

    def test_state_validation(self):
        with pytest.raises(InputDomainError):
            MechanismState([1.0], [1.0, 2.0])
        with pytest.raises(InputDomainError):
            MechanismState([-1.0], [1.0])
        with pytest.raises(InputDomainError):
            MechanismState([1.0], [2000.0]).validate(1000)

    @pytest.mark.parametrize("kwargs", [
        {"gamma": -1}, {"d_max": 0.5}, {"convergence_tol": 0}, {"max_iterations": 0},
        {"init_data_size": 2000}, {"order": "backwards"},
    ])
    def test_server_config_validation(self, kwargs):
        with pytest.raises(InputDomainError):
            ServerConfig(**kwargs)

    def test_population_is_seeded_and_in_range(self):
        a = make_population(200, 1e-5, 1e-3, seed=3)
        b = make_population(200, 1e-5, 1e-3, seed=3)
        assert a == b
        costs = np.array([p.unit_cost for p in a])
        assert costs.min() >= 1e-5 and costs.max() <= 1e-3
        assert all(p.alpha == pytest.approx(p.beta) for p in a)
