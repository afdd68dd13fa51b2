"""Incentive mechanism design for distributed bagging ensembles."""

from .bagging_sim import SimConfig, simulate_ensemble
from .core_model import (
    LearnerProfile,
    MechanismState,
    ServerConfig,
    communication_cost,
    computation_cost,
    learner_payoff,
    optimal_participation,
)
from .optimizer import (
    OptimizerReport,
    alternate_optimize,
    brute_force_oracle,
    optimal_data_size_relaxed,
    optimal_reward,
    server_payoff,
)
from .surrogate import (
    EnsembleOutcome,
    FittedAccuracyModel,
    diversity_term,
    fit_accuracy_model,
    fitted_f,
    pearson,
    precision_term,
    surrogate_f,
)

__version__ = "0.1.0"

__all__ = [
    "EnsembleOutcome", "FittedAccuracyModel", "LearnerProfile", "MechanismState", "OptimizerReport",
    "ServerConfig", "SimConfig", "alternate_optimize", "brute_force_oracle", "communication_cost",
    "computation_cost", "diversity_term", "fit_accuracy_model", "fitted_f", "learner_payoff",
    "optimal_data_size_relaxed", "optimal_participation", "optimal_reward", "pearson",
    "precision_term", "server_payoff", "simulate_ensemble", "surrogate_f",
]
