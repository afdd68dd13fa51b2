"""Diversity-precision surrogate accuracy and its parametric fit.

The surrogate of an ensemble outcome is the sum of

* a diversity term, ``sum(l_d**2) / (D_T * N_P * (N_P - 1))`` where ``l_d``
  counts the learners that misclassify sample ``d`` of the union dataset, and
* a precision term, ``(p_bar - 1) / (N_P - 1)``.

The optimizer never simulates learners. It works with a smooth product-of-logs
model of accuracy in the participant count and the total data volume,

    (a*log(N*b + c) + d) * (e*log((f/N)*S + g) + h),

fitted by least squares to simulated sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize


class DegenerateEnsembleError(ValueError):
    """Raised when an ensemble term needs at least two participants."""


class ModelDomainError(ValueError):
    """Raised when a fitted model is evaluated where a log argument is <= 0."""


class UndefinedCorrelationError(ValueError):
    pass


class InsufficientSamplesError(ValueError):
    """Raised when a sweep is too small to identify the fitted form."""


class FitError(RuntimeError):
    """Raised when curve fitting fails; carries the best parameters seen."""

    def __init__(self, message: str, best: FittedAccuracyModel | None = None, rmse: float = math.inf):
        super().__init__(message)
        self.best = best
        self.rmse = rmse


@dataclass
class EnsembleOutcome:
    """Realized statistics of one simulated ensemble.

    Attributes:
        fault_counts: per union sample, number of participating learners
            that predict it wrongly.
        union_size: number of distinct samples in the union of the
            participants' datasets.
        n_participants: number of participating learners.
        precisions: each participant's accuracy on its own dataset.
        mean_precision: average of ``precisions``.
        true_accuracy: plurality-vote accuracy over the union, when simulated.
    """

    fault_counts: np.ndarray
    union_size: int
    n_participants: int
    precisions: np.ndarray
    mean_precision: float = math.nan
    true_accuracy: float | None = None

    def __post_init__(self):
        self.fault_counts = np.asarray(self.fault_counts, dtype=np.int64)
        self.precisions = np.asarray(self.precisions, dtype=float)
        if len(self.fault_counts) != self.union_size:
            raise ValueError("fault_counts length must equal union_size")
        if np.any(self.fault_counts < 0) or np.any(self.fault_counts > self.n_participants):
            raise ValueError("fault counts must lie in [0, n_participants]")
        if math.isnan(self.mean_precision):
            self.mean_precision = float(self.precisions.mean()) if len(self.precisions) else 0.0
        elif len(self.precisions) and not math.isclose(
            self.mean_precision, float(self.precisions.mean()), rel_tol=1e-9, abs_tol=1e-12
        ):
            raise ValueError("mean_precision disagrees with precisions")


def _require_pair(outcome: EnsembleOutcome) -> None:
    if outcome.n_participants < 2:
        raise DegenerateEnsembleError(
            f"need at least 2 participants, got {outcome.n_participants}"
        )


def diversity_term(outcome: EnsembleOutcome) -> float:
    _require_pair(outcome)
    if outcome.union_size < 1:
        raise DegenerateEnsembleError("union dataset is empty")
    n = outcome.n_participants
    l = outcome.fault_counts
    # integer sum of squares is exact; divide once
    return float(np.dot(l, l)) / (outcome.union_size * n * (n - 1))


def precision_term(outcome: EnsembleOutcome) -> float:
    _require_pair(outcome)
    return (outcome.mean_precision - 1.0) / (outcome.n_participants - 1)


def surrogate_f(outcome: EnsembleOutcome) -> float:
    """Surrogate accuracy of an outcome.

    Ensembles below two participants use fixed conventions: no participants
    score 0 and a lone learner scores its own precision.
    """
    if outcome.n_participants == 0:
        return 0.0
    if outcome.n_participants == 1:
        return float(outcome.mean_precision)
    return diversity_term(outcome) + precision_term(outcome)


PARAM_NAMES = ("a", "b", "c", "d", "e", "f", "g", "h")


@dataclass(frozen=True)
class FittedAccuracyModel:
    a: float
    b: float
    c: float
    d: float
    e: float
    f: float
    g: float
    h: float
    rmse: float = math.nan

    @property
    def params(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in PARAM_NAMES])

    @classmethod
    def from_params(cls, params: Sequence[float], rmse: float = math.nan) -> FittedAccuracyModel:
        return cls(*(float(v) for v in params), rmse=float(rmse))

    def participant_factor(self, n: float) -> float:
        arg = n * self.b + self.c
        if not arg > 0:
            raise ModelDomainError(f"log argument N*b + c = {arg} at N={n}")
        return self.a * math.log(arg) + self.d

    def data_factor(self, n: float, total_data: float) -> float:
        arg = self.f / n * total_data + self.g
        if not arg > 0:
            raise ModelDomainError(f"log argument (f/N)*S + g = {arg} at N={n}, S={total_data}")
        return self.e * math.log(arg) + self.h

    def __call__(self, n: float, total_data: float) -> float:
        return fitted_f(self, n, total_data)

    def is_valid_on(self, n_max: float, mean_data_max: float) -> bool:
        """Check positivity of both log arguments on N in [1, n_max], S/N in [0, mean_data_max]."""
        ends_n = (self.b + self.c, n_max * self.b + self.c)
        ends_m = (self.g, self.f * mean_data_max + self.g)
        return min(ends_n) > 0 and min(ends_m) > 0

    def is_concave_increasing_in_data(self, n: float) -> bool:
        """The data factor is concave increasing and the participant factor positive."""
        return self.e * self.f > 0 and self.e > 0 and self.participant_factor(n) > 0

    def to_text(self) -> str:
        lines = [f"{k} = {getattr(self, k)!r}" for k in PARAM_NAMES]
        lines.append(f"rmse = {self.rmse!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> FittedAccuracyModel:
        values: dict[str, float] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in PARAM_NAMES and key != "rmse":
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            values[key] = float(value)
        missing = [k for k in PARAM_NAMES if k not in values]
        if missing:
            raise ValueError(f"missing keys: {', '.join(missing)}")
        return cls(**values)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> FittedAccuracyModel:
        return cls.from_text(Path(path).read_text())


def constant_model(value: float) -> FittedAccuracyModel:
    """A model that evaluates to ``value`` everywhere."""
    return FittedAccuracyModel(a=0.0, b=1.0, c=1.0, d=value, e=0.0, f=1.0, g=1.0, h=1.0, rmse=0.0)


def fitted_f(model: FittedAccuracyModel, n_participants: float, total_data: float) -> float:
    if n_participants < 1:
        raise ModelDomainError(f"n_participants must be >= 1, got {n_participants}")
    return model.participant_factor(n_participants) * model.data_factor(n_participants, total_data)


def _evaluate(params: np.ndarray, n: np.ndarray, s: np.ndarray) -> np.ndarray:
    a, b, c, d, e, f, g, h = params
    with np.errstate(invalid="ignore", divide="ignore"):
        return (a * np.log(n * b + c) + d) * (e * np.log(f / n * s + g) + h)


# Internally b and f are kept >= 0 and c is replaced by c1 = b + c > 0, so box
# bounds alone keep both log arguments positive for every N >= 1 and S >= 0.
_EPS = 1e-9
_BOUNDS = {
    "free": np.array([-np.inf, 0.0, _EPS, -np.inf, -np.inf, 0.0, _EPS, -np.inf]),
    # both factors non-negative, non-decreasing and concave in N and in S
    "monotone": np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
}
_UPPER = np.full(8, np.inf)


def _to_internal(p: np.ndarray) -> np.ndarray:
    q = p.copy()
    q[2] = p[1] + p[2]
    return q


def _from_internal(q: np.ndarray) -> np.ndarray:
    p = q.copy()
    p[2] = q[2] - q[1]
    return p


def _initial_guess(rng: np.random.Generator, mean_y: float, lower: np.ndarray) -> np.ndarray:
    q = np.empty(8)
    q[0] = rng.normal(0.0, 1.0)
    q[1] = 10 ** rng.uniform(-3, 0)
    q[2] = 10 ** rng.uniform(-2, 1)
    q[3] = rng.normal(0.0, 1.0)
    q[4] = rng.normal(0.0, 1.0)
    q[5] = 10 ** rng.uniform(-4, -1)
    q[6] = 10 ** rng.uniform(-2, 1)
    q[7] = rng.normal(mean_y, 1.0)
    # reflect into the feasible box, strictly inside it
    finite = np.isfinite(lower)
    q[finite] = lower[finite] + np.abs(q[finite] - lower[finite]) + 1e-6
    return q


def fit_accuracy_model(
    samples: Sequence[tuple[float, float, float]],
    restarts: int = 16,
    seed: int = 0,
    max_nfev: int = 500,
    shape: str = "free",
) -> FittedAccuracyModel:
    """Least-squares fit of the product-of-logs accuracy form.

    ``samples`` holds ``(n_participants, total_data, observed)`` triples. Each
    of ``restarts`` seeded random starts is refined by bounded trust-region
    least squares; the lowest RMSE wins (ties go to the earlier start). The
    returned model is valid for every ``N >= 1`` and ``S >= 0``.

    ``shape="monotone"`` restricts the fit to surfaces that are non-negative,
    non-decreasing and concave in both the participant count and the mean
    data size, which the optimizer relies on. ``shape="free"`` only keeps the
    log arguments positive.
    """
    if shape not in _BOUNDS:
        raise ValueError(f"shape must be one of {sorted(_BOUNDS)}, got {shape!r}")
    lower = _BOUNDS[shape]
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("samples must be (n_participants, total_data, observed) triples")
    if len(arr) < 8 or len(np.unique(arr[:, 0])) < 2 or len(np.unique(arr[:, 1])) < 2:
        raise InsufficientSamplesError(
            "need >= 8 samples spanning >= 2 distinct N and >= 2 distinct total_data values"
        )
    if np.any(arr[:, 0] < 1) or np.any(arr[:, 1] < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("samples must have N >= 1, total_data >= 0 and finite values")
    n, s, y = arr.T
    mean_y = float(y.mean())

    def residuals(q):
        r = _evaluate(_from_internal(q), n, s) - y
        return np.where(np.isfinite(r), r, 1e6)

    rng = np.random.default_rng(seed)
    best_q, best_rmse = None, math.inf
    for _ in range(restarts):
        q0 = _initial_guess(rng, mean_y, lower)
        try:
            res = optimize.least_squares(
                residuals, q0, bounds=(lower, _UPPER), method="trf",
                x_scale="jac", max_nfev=max_nfev, xtol=1e-15, ftol=1e-15, gtol=1e-15,
            )
        except (ValueError, FloatingPointError):
            continue
        rmse = math.sqrt(float(np.mean(res.fun**2)))
        if rmse < best_rmse:
            best_q, best_rmse = res.x, rmse

    if best_q is None or not math.isfinite(best_rmse):
        raise FitError("no restart produced a finite fit")
    model = FittedAccuracyModel.from_params(_from_internal(best_q), rmse=best_rmse)
    if best_rmse >= 1e5:
        raise FitError("fit diverged", best=model, rmse=best_rmse)
    return model


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("pearson needs two 1-D vectors of equal length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant vector")
    r = float(np.dot(xc, yc)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))
