"""Learner-side economics and the shared domain types.

A learner that trains on ``D`` samples pays ``alpha * D`` for computation and
``beta * (D + M)`` for communication. It joins the ensemble only when the
offered reward covers that cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InputDomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class LearnerProfile:
    """Cost coefficients of one learner.

    Attributes:
        id: index of the learner in the population.
        alpha: computation cost per training sample.
        beta: communication cost per transferred sample.
        model_size: size of the uploaded model in data units.
    """

    id: int
    alpha: float
    beta: float
    model_size: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputDomainError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise InputDomainError(f"beta must be > 0, got {self.beta}")
        if not self.model_size >= 0:
            raise InputDomainError(f"model_size must be >= 0, got {self.model_size}")

    @property
    def unit_cost(self) -> float:
        """Total cost per sample, ``alpha + beta``."""
        return self.alpha + self.beta


@dataclass
class MechanismState:
    """Reward and data-size decision vectors chosen by the server."""

    rewards: np.ndarray
    data_sizes: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=float)
        self.data_sizes = np.asarray(self.data_sizes, dtype=float)
        if self.rewards.shape != self.data_sizes.shape or self.rewards.ndim != 1:
            raise InputDomainError("rewards and data_sizes must be 1-D vectors of equal length")
        if np.any(self.rewards < 0):
            raise InputDomainError("rewards must be non-negative")
        if np.any(self.data_sizes < 0):
            raise InputDomainError("data sizes must be non-negative")
        if self.iteration < 0:
            raise InputDomainError("iteration must be non-negative")

    @property
    def n_learners(self) -> int:
        return len(self.rewards)

    def validate(self, d_max: float) -> None:
        if np.any(self.data_sizes > d_max):
            raise InputDomainError(f"data sizes must lie in [0, {d_max}]")

    def copy(self) -> MechanismState:
        return MechanismState(self.rewards.copy(), self.data_sizes.copy(), self.iteration)


@dataclass(frozen=True)
class ServerConfig:
    """Server-side settings for the mechanism design problem.

    ``init_data_size`` and ``order`` control the starting point and the
    visiting order of the alternating optimizer.
    """

    gamma: float = 3000.0
    d_max: float = 1000.0
    convergence_tol: float = 1e-3
    max_iterations: int = 50
    seed: int = 0
    init_data_size: float = 500.0
    order: str = "sorted"

    def __post_init__(self):
        if not self.gamma >= 0:
            raise InputDomainError(f"gamma must be >= 0, got {self.gamma}")
        if not self.d_max >= 1:
            raise InputDomainError(f"d_max must be >= 1, got {self.d_max}")
        if not 0 < self.convergence_tol < 1:
            raise InputDomainError(f"convergence_tol must lie in (0, 1), got {self.convergence_tol}")
        if self.max_iterations < 1:
            raise InputDomainError("max_iterations must be >= 1")
        if not 0 <= self.init_data_size <= self.d_max:
            raise InputDomainError("init_data_size must lie in [0, d_max]")
        if self.order not in ("sorted", "random"):
            raise InputDomainError(f"order must be 'sorted' or 'random', got {self.order!r}")


def _check_size(data_size: float) -> None:
    if not data_size >= 0:
        raise InputDomainError(f"data_size must be >= 0, got {data_size}")


def computation_cost(profile: LearnerProfile, data_size: float) -> float:
    _check_size(data_size)
    return profile.alpha * data_size


def communication_cost(profile: LearnerProfile, data_size: float) -> float:
    _check_size(data_size)
    return profile.beta * (data_size + profile.model_size)


def learner_payoff(profile: LearnerProfile, participate: bool, reward: float, data_size: float) -> float:
    """Payoff of a learner given its participation decision.

    The cost is ``(alpha + beta) * D``; the model upload term is left out as
    in the normalized setting where ``model_size`` is negligible.
    """
    _check_size(data_size)
    if not reward >= 0:
        raise InputDomainError(f"reward must be >= 0, got {reward}")
    if not participate:
        return 0.0
    return reward - profile.unit_cost * data_size


def optimal_participation(profile: LearnerProfile, reward: float, data_size: float) -> bool:
    """Return True iff the reward covers the training cost (ties participate)."""
    _check_size(data_size)
    if not reward >= 0:
        raise InputDomainError(f"reward must be >= 0, got {reward}")
    return reward >= profile.unit_cost * data_size


def is_active(profile: LearnerProfile, reward: float, data_size: float) -> bool:
    """Participation as seen by the server: willing to join and assigned data.

    A learner with no data would contribute a chance-level model, so it is not
    counted even though it is willing to participate.
    """
    return data_size > 0 and optimal_participation(profile, reward, data_size)


def active_mask(profiles: list[LearnerProfile], state: MechanismState) -> np.ndarray:
    costs = np.array([p.unit_cost for p in profiles])
    d = state.data_sizes
    return (d > 0) & (state.rewards >= costs * d)


def make_population(
    n_learners: int,
    cost_low: float = 1e-5,
    cost_high: float = 1e-3,
    alpha_fraction: float = 0.5,
    seed: int = 0,
) -> list[LearnerProfile]:
    """Draw learners with ``alpha + beta ~ U[cost_low, cost_high]``.

    The sum is split into ``alpha = alpha_fraction * sum`` and the remainder
    as ``beta``.
    """
    if n_learners < 1:
        raise InputDomainError("n_learners must be >= 1")
    if not 0 < cost_low <= cost_high:
        raise InputDomainError("cost bounds must satisfy 0 < low <= high")
    if not 0 < alpha_fraction < 1:
        raise InputDomainError("alpha_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    total = rng.uniform(cost_low, cost_high, size=n_learners)
    return [
        LearnerProfile(id=i, alpha=float(alpha_fraction * c), beta=float(c - alpha_fraction * c))
        for i, c in enumerate(total)
    ]
