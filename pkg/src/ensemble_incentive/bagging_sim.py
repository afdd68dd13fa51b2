"""Synthetic bagging ensemble.

Stands in for real model training. Each learner draws a bootstrap sample from
a shared pool, gets a precision from a saturating learning curve in its data
size, and errs on each union sample with a probability scaled by a shared
per-sample difficulty, so errors are positively correlated across learners.
Wrong predictions pick a label uniformly among the incorrect classes, and the
ensemble answer is the plurality vote.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core_model import LearnerProfile, MechanismState, active_mask
from .surrogate import EnsembleOutcome, diversity_term, precision_term, surrogate_f

SeedLike = int | np.random.Generator | None


@dataclass(frozen=True)
class SimConfig:
    """Simulator settings.

    ``difficulty_alpha`` / ``difficulty_beta`` are the Beta shape parameters
    of per-sample difficulty; set either to ``None`` to give every sample the
    same difficulty (independent errors).
    """

    pool_size: int = 60000
    n_classes: int = 10
    p_max: float = 0.97
    kappa: float = 800.0
    difficulty_alpha: float | None = 2.0
    difficulty_beta: float | None = 5.0
    trials: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if not self.chance_accuracy < self.p_max <= 1:
            raise ValueError("p_max must lie in (1/n_classes, 1]")
        if not self.kappa > 0:
            raise ValueError("kappa must be > 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.has_difficulty and not (self.difficulty_alpha > 0 and self.difficulty_beta > 0):
            raise ValueError("difficulty shape parameters must be > 0")

    @property
    def chance_accuracy(self) -> float:
        return 1.0 / self.n_classes

    @property
    def has_difficulty(self) -> bool:
        return self.difficulty_alpha is not None and self.difficulty_beta is not None

    @property
    def mean_difficulty(self) -> float:
        return self.difficulty_alpha / (self.difficulty_alpha + self.difficulty_beta)


@dataclass
class CorrectnessMatrix:
    """Correct/incorrect predictions of participants on the union dataset.

    ``own_columns[i]`` lists, with repetition, the union columns of learner
    ``i``'s bootstrap sample.
    """

    correct: np.ndarray
    own_columns: list[np.ndarray]

    @property
    def fault_counts(self) -> np.ndarray:
        return (~self.correct).sum(axis=0).astype(np.int64)

    def own_accuracy(self) -> np.ndarray:
        return np.array(
            [self.correct[i, cols].mean() if len(cols) else math.nan
             for i, cols in enumerate(self.own_columns)]
        )


def bootstrap_assign(
    data_sizes: Sequence[int], pool_size: int, rng: np.random.Generator
) -> tuple[list[np.ndarray], np.ndarray]:
    """Draw each learner's bootstrap sample and the union of all draws.

    Sample ids run over ``0 .. pool_size - 1``. Returns the per-learner draws
    (multisets) and the sorted distinct ids.
    """
    draws = [rng.integers(0, pool_size, size=int(n)) for n in data_sizes]
    if draws:
        union = np.unique(np.concatenate(draws))
    else:
        union = np.empty(0, dtype=np.int64)
    return draws, union


def precision_curve(config: SimConfig, data_size: float) -> float:
    if data_size < 0:
        raise ValueError("data_size must be >= 0")
    chance = config.chance_accuracy
    return chance + (config.p_max - chance) * -math.expm1(-data_size / config.kappa)


def simulate_votes(
    precisions: np.ndarray,
    own_columns: list[np.ndarray],
    union_size: int,
    config: SimConfig,
    rng: np.random.Generator,
) -> tuple[CorrectnessMatrix, float]:
    """Draw predictions for every learner on every union sample and vote.

    Returns the correctness matrix and the plurality-vote accuracy. The true
    label of every sample is taken to be class 0; labels are exchangeable
    under the error model so this loses nothing.
    """
    n = len(precisions)
    k = config.n_classes
    err = (1.0 - np.asarray(precisions, dtype=float)).astype(np.float32)
    if config.has_difficulty:
        hardness = rng.beta(config.difficulty_alpha, config.difficulty_beta, size=union_size)
        scale = (hardness / config.mean_difficulty).astype(np.float32)
        prob = np.minimum(np.float32(1.0), err[:, None] * scale[None, :])
    else:
        prob = np.broadcast_to(err[:, None], (n, union_size))
    wrong = rng.random((n, union_size), dtype=np.float32) < prob

    faults = np.count_nonzero(wrong, axis=0)
    right = n - faults
    # The correct label wins outright when it outvotes all wrong votes combined
    # and loses outright with no votes; only the rest need wrong-label draws.
    won = right > faults
    open_ = np.nonzero((right > 0) & ~won)[0]
    if len(open_):
        # iid uniform wrong labels give multinomial counts over the k-1 wrong classes
        counts = rng.multinomial(faults[open_], np.full(k - 1, 1.0 / (k - 1)))
        top = counts.max(axis=1)
        c = right[open_]
        n_tied = (counts == top[:, None]).sum(axis=1)
        # plurality ties are broken uniformly among the tied labels
        tie_win = rng.random(len(open_)) * (n_tied + 1) < 1.0
        won[open_] = (c > top) | ((c == top) & tie_win)
    accuracy = float(np.mean(won)) if union_size else math.nan
    return CorrectnessMatrix(~wrong, own_columns), accuracy


def simulate_trial(
    profiles: Sequence[LearnerProfile],
    state: MechanismState,
    config: SimConfig,
    rng: np.random.Generator,
) -> tuple[EnsembleOutcome, CorrectnessMatrix | None]:
    """One Monte-Carlo realization of the ensemble defined by ``state``."""
    mask = active_mask(list(profiles), state)
    sizes = np.rint(state.data_sizes[mask]).astype(np.int64)
    if len(sizes) == 0:
        outcome = EnsembleOutcome(
            fault_counts=np.empty(0, dtype=np.int64), union_size=0, n_participants=0,
            precisions=np.empty(0), mean_precision=0.0, true_accuracy=config.chance_accuracy,
        )
        return outcome, None
    draws, union = bootstrap_assign(sizes, config.pool_size, rng)
    position = np.empty(config.pool_size, dtype=np.int64)
    position[union] = np.arange(len(union))
    own_columns = [position[d] for d in draws]
    p = np.array([precision_curve(config, s) for s in sizes])
    matrix, accuracy = simulate_votes(p, own_columns, len(union), config, rng)
    own = matrix.own_accuracy()
    outcome = EnsembleOutcome(
        fault_counts=matrix.fault_counts,
        union_size=len(union),
        n_participants=len(sizes),
        precisions=own,
        mean_precision=math.fsum(own) / len(own),
        true_accuracy=accuracy,
    )
    return outcome, matrix


def _stats(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if np.any(np.isnan(arr)):
        return math.nan, math.nan
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var / len(values))


@dataclass
class SimulationSummary:
    """Monte-Carlo averages over independent trials, with standard errors.

    Terms that are undefined for fewer than two participants are NaN.
    """

    n_participants: int
    trials: int
    true_accuracy: float
    true_accuracy_se: float
    surrogate: float
    surrogate_se: float
    diversity: float
    diversity_se: float
    precision: float
    precision_se: float
    mean_precision: float
    mean_precision_se: float
    union_size: float
    last_outcome: EnsembleOutcome
    outcomes: list[EnsembleOutcome] = field(default_factory=list, repr=False)


def _base_seed(rng: SeedLike) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63 - 1))
    return 0 if rng is None else int(rng)


def simulate_ensemble(
    profiles: Sequence[LearnerProfile],
    state: MechanismState,
    config: SimConfig,
    rng: SeedLike = None,
    keep_outcomes: bool = False,
) -> SimulationSummary:
    """Average ``config.trials`` independent realizations.

    Trial ``t`` draws from its own stream seeded by ``(seed, t)``, so the
    result does not depend on execution order. ``rng=None`` uses
    ``config.seed``.
    """
    base = config.seed if rng is None else _base_seed(rng)
    acc, sur, div, prec, pbar, union = [], [], [], [], [], []
    kept = []
    outcome = None
    for t in range(config.trials):
        trial_rng = np.random.default_rng([base, t])
        outcome, _ = simulate_trial(profiles, state, config, trial_rng)
        acc.append(outcome.true_accuracy)
        sur.append(surrogate_f(outcome))
        if outcome.n_participants >= 2:
            div.append(diversity_term(outcome))
            prec.append(precision_term(outcome))
        else:
            div.append(math.nan)
            prec.append(math.nan)
        pbar.append(outcome.mean_precision)
        union.append(float(outcome.union_size))
        if keep_outcomes:
            kept.append(outcome)
    return SimulationSummary(
        outcome.n_participants, config.trials,
        *_stats(acc), *_stats(sur), *_stats(div), *_stats(prec), *_stats(pbar),
        math.fsum(union) / len(union), outcome, kept,
    )


def uniform_state(n_learners: int, data_size: int) -> tuple[list[LearnerProfile], MechanismState]:
    """Profiles and a fully-participating state with a common data size.

    Used by the accuracy sweep, where every learner is paid its exact cost.
    """
    profiles = [LearnerProfile(id=i, alpha=0.5, beta=0.5) for i in range(n_learners)]
    sizes = np.full(n_learners, float(data_size))
    return profiles, MechanismState(rewards=sizes.copy(), data_sizes=sizes)
