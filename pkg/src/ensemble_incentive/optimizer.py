"""Server-side mechanism design: rewards, data sizes, alternating optimization.

The server payoff is ``gamma * F(N_P, S) - sum(R)``, where ``F`` is a fitted
accuracy model, ``N_P`` counts participating learners and ``S`` sums their
data sizes. Rewards only matter through participation, so a learner's reward
is either its exact cost or zero, and each learner's data size is a 1-D
concave problem when the model is concave in the data volume.
"""

from __future__ import annotations

import io
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core_model import LearnerProfile, MechanismState, ServerConfig, active_mask
from .surrogate import FittedAccuracyModel, _evaluate

INV_PHI = (math.sqrt(5) - 1) / 2
SOLVER_TOL = 1e-3
MAX_EVALS = 200
GRID_POINTS = 64


class SolverError(RuntimeError):
    pass


class OracleSizeError(ValueError):
    """Raised when an exhaustive search would be too large to run."""


def _accuracy(model: FittedAccuracyModel, n: int, total: float) -> float:
    return 0.0 if n <= 0 else model(n, total)


def _data_slope(model: FittedAccuracyModel, n: int, total: float) -> float:
    """d/dS of the model at fixed participant count."""
    k = model.f / n
    return model.participant_factor(n) * model.e * k / (k * total + model.g)


def _totals(profiles: Sequence[LearnerProfile], state: MechanismState, exclude: int | None = None):
    mask = active_mask(list(profiles), state)
    if exclude is not None:
        mask[exclude] = False
    return int(mask.sum()), math.fsum(state.data_sizes[mask])


def server_payoff(
    model: FittedAccuracyModel,
    profiles: Sequence[LearnerProfile],
    state: MechanismState,
    gamma: float,
) -> float:
    n, total = _totals(profiles, state)
    return gamma * _accuracy(model, n, total) - math.fsum(state.rewards)


def _inclusion_gain(model, n_out: int, s_out: float, size: float) -> float:
    return _accuracy(model, n_out + 1, s_out + size) - _accuracy(model, n_out, s_out)


def _reward_for(model, gamma: float, unit_cost: float, n_out: int, s_out: float, size: float) -> float:
    if size <= 0:
        return 0.0
    cost = unit_cost * size
    return cost if gamma * _inclusion_gain(model, n_out, s_out, size) >= cost else 0.0


def optimal_reward(
    model: FittedAccuracyModel,
    profiles: Sequence[LearnerProfile],
    state: MechanismState,
    i: int,
    gamma: float,
) -> float:
    """Pay learner ``i`` exactly its cost if its participation is worth it, else 0.

    The benefit compares the model with learner ``i`` added to, versus removed
    from, the other learners' current participation.
    """
    n_out, s_out = _totals(profiles, state, exclude=i)
    return _reward_for(model, gamma, profiles[i].unit_cost, n_out, s_out, float(state.data_sizes[i]))


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = SOLVER_TOL, max_evals: int = MAX_EVALS) -> float:
    """Maximizer of a unimodal ``f`` on ``[lo, hi]`` to within ``tol``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while b - a > tol and evals < max_evals:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    return 0.5 * (a + b)


def _solve_size(model: FittedAccuracyModel, gamma: float, unit_cost: float,
                n_out: int, s_out: float, d_max: float) -> float:
    n_in = n_out + 1
    if gamma == 0:
        return 0.0
    if model.participant_factor(n_in) * model.e >= 0 and model.f != 0:
        # concave in the data size: bisect on the analytic derivative
        def slope(x):
            return gamma * _data_slope(model, n_in, s_out + x) - unit_cost

        if slope(0.0) <= 0:
            return 0.0
        if slope(d_max) >= 0:
            return float(d_max)
        lo, hi = 0.0, float(d_max)
        while hi - lo > 0.1 * SOLVER_TOL:
            mid = 0.5 * (lo + hi)
            if slope(mid) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def objective(x):
        return gamma * model(n_in, s_out + x) - unit_cost * x

    grid = np.linspace(0.0, d_max, GRID_POINTS + 1)
    values = [objective(x) for x in grid]
    k = int(np.argmax(values))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, GRID_POINTS)]
    candidates = [golden_section_max(objective, lo, hi), 0.0, float(d_max), float(grid[k])]
    return max(candidates, key=lambda x: (objective(x), -x))


def optimal_data_size_relaxed(
    model: FittedAccuracyModel,
    profiles: Sequence[LearnerProfile],
    state: MechanismState,
    i: int,
    gamma: float,
    d_max: float,
) -> float:
    """Best real data size for learner ``i``, treating it as participating.

    Maximizes ``gamma * F(N_out + 1, S_out + x) - (alpha_i + beta_i) * x`` over
    ``x`` in ``[0, d_max]`` with the other learners held fixed.
    """
    n_out, s_out = _totals(profiles, state, exclude=i)
    try:
        return _solve_size(model, gamma, profiles[i].unit_cost, n_out, s_out, d_max)
    except ValueError as exc:
        raise SolverError(str(exc)) from exc


def _member_value(model, gamma: float, unit_cost: float, n_out: int, s_out: float, size: float) -> float:
    """Server payoff share of learner ``i`` at ``size`` under the best reward for it.

    Zero data means exclusion; otherwise the server either pays the cost or
    leaves the learner out, whichever is better.
    """
    outside = gamma * _accuracy(model, n_out, s_out)
    if size <= 0:
        return outside
    return max(outside, gamma * _accuracy(model, n_out + 1, s_out + size) - unit_cost * size)


def round_data_size(d: float, objective: Callable[[int], float]) -> int:
    """Round ``d`` to the better of its floor and ceiling; ties go down."""
    lo, hi = math.floor(d), math.ceil(d)
    if lo == hi:
        return int(lo)
    return int(hi) if objective(hi) > objective(lo) else int(lo)


def round_to_grid(d: float, grid: Sequence[float], objective: Callable[[float], float]) -> float:
    """Move ``d`` to the better of its neighbouring grid points; ties go down."""
    pts = sorted(grid)
    below = [g for g in pts if g <= d]
    above = [g for g in pts if g >= d]
    lo = below[-1] if below else pts[0]
    hi = above[0] if above else pts[-1]
    if lo == hi:
        return lo
    return hi if objective(hi) > objective(lo) else lo


@dataclass
class OptimizerReport:
    """Result of the alternating optimization.

    ``relaxed_state`` is the real-valued state at termination. The traces
    hold, after each pass, the server payoff, participant count and mean
    participant data size of the relaxed state. ``passes_run`` also counts
    the final pass that only confirmed convergence.
    """

    final_state: MechanismState
    server_payoff: float
    n_participants: int
    iterations_used: int
    payoff_trace: list[float]
    converged: bool
    wall_time: float
    order: list[int] = field(default_factory=list)
    relaxed_state: MechanismState | None = None
    passes_run: int = 0
    participant_trace: list[int] = field(default_factory=list)
    mean_size_trace: list[float] = field(default_factory=list)

    def to_text(self) -> str:
        d = self.final_state.data_sizes
        part = d[self.final_state.rewards > 0]
        rows = {
            "server_payoff": repr(self.server_payoff),
            "n_learners": str(len(d)),
            "n_participants": str(self.n_participants),
            "mean_participant_data_size": repr(float(part.mean()) if len(part) else 0.0),
            "total_reward": repr(math.fsum(self.final_state.rewards)),
            "iterations_used": str(self.iterations_used),
            "passes_run": str(self.passes_run),
            "converged": str(self.converged).lower(),
            "wall_time": f"{self.wall_time:.6f}",
        }
        return "".join(f"{k} = {v}\n" for k, v in rows.items())

    def trace_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iteration,server_payoff\n")
        for t, v in enumerate(self.payoff_trace, start=1):
            buf.write(f"{t},{v!r}\n")
        return buf.getvalue()

    def state_csv(self, profiles: Sequence[LearnerProfile]) -> str:
        buf = io.StringIO()
        buf.write("learner,alpha,beta,reward,data_size,participating\n")
        mask = active_mask(list(profiles), self.final_state)
        for p, r, d, m in zip(profiles, self.final_state.rewards, self.final_state.data_sizes, mask):
            buf.write(f"{p.id},{p.alpha!r},{p.beta!r},{float(r)!r},{float(d)!r},{int(m)}\n")
        return buf.getvalue()


def visiting_order(profiles: Sequence[LearnerProfile], config: ServerConfig) -> list[int]:
    if config.order == "random":
        return [int(i) for i in np.random.default_rng(config.seed).permutation(len(profiles))]
    return sorted(range(len(profiles)), key=lambda i: (profiles[i].unit_cost, i))


def _relative_change(old: np.ndarray, new: np.ndarray) -> float:
    scale = np.maximum(np.abs(old), np.abs(new))
    diff = np.abs(new - old)
    ratio = np.divide(diff, scale, out=np.zeros_like(diff), where=scale > 0)
    return float(ratio.max()) if len(ratio) else 0.0


def alternate_optimize(
    model: FittedAccuracyModel,
    profiles: Sequence[LearnerProfile],
    config: ServerConfig,
    initial_state: MechanismState | None = None,
    d_grid: Sequence[float] | None = None,
) -> OptimizerReport:
    """Round-robin reward and data-size updates until the decisions settle.

    Learners are visited in ascending order of ``alpha + beta``. For each,
    the data size is re-solved on the relaxed interval and then the reward is
    reset to the cost-or-nothing rule. A new data size is only accepted if it
    does not lower the server payoff, which keeps every pass an ascent step.
    Data sizes stay real-valued until the end, when they are rounded to
    integers (or onto ``d_grid`` if given) and rewards are recomputed.
    """
    if not profiles:
        raise ValueError("profiles must be non-empty")
    start = time.perf_counter()
    gamma, d_max = config.gamma, config.d_max
    costs = np.array([p.unit_cost for p in profiles])
    n_learners = len(profiles)
    if initial_state is None:
        state = MechanismState(np.zeros(n_learners), np.full(n_learners, float(config.init_data_size)))
    else:
        state = initial_state.copy()
        state.validate(d_max)
    rewards, sizes = state.rewards, state.data_sizes
    order = visiting_order(profiles, config)

    active = active_mask(list(profiles), state)
    n_act, s_act = int(active.sum()), math.fsum(sizes[active])
    trace: list[float] = []
    n_trace: list[int] = []
    size_trace: list[float] = []
    converged = False
    passes = 0
    for passes in range(1, config.max_iterations + 1):
        before = np.concatenate([rewards, sizes])
        for i in order:
            c = costs[i]
            n_out = n_act - int(active[i])
            s_out = s_act - sizes[i] if active[i] else s_act
            candidate = _solve_size(model, gamma, c, n_out, s_out, d_max)
            if _member_value(model, gamma, c, n_out, s_out, candidate) >= _member_value(
                model, gamma, c, n_out, s_out, sizes[i]
            ):
                sizes[i] = candidate
            rewards[i] = _reward_for(model, gamma, c, n_out, s_out, sizes[i])
            active[i] = rewards[i] > 0
            n_act = n_out + int(active[i])
            s_act = s_out + (sizes[i] if active[i] else 0.0)
        s_act = math.fsum(sizes[active])
        state.iteration = passes
        trace.append(server_payoff(model, profiles, state, gamma))
        n_trace.append(n_act)
        size_trace.append(s_act / n_act if n_act else 0.0)
        if _relative_change(before, np.concatenate([rewards, sizes])) < config.convergence_tol:
            converged = True
            break

    # the confirming pass changes nothing, so it is not counted as an iteration
    used = max(passes - 1, 1) if converged else passes
    relaxed = state.copy()

    final = state.copy()
    active = active_mask(list(profiles), final)
    n_act, s_act = int(active.sum()), math.fsum(final.data_sizes[active])
    for i in order:
        c = costs[i]
        n_out = n_act - int(active[i])
        s_out = s_act - final.data_sizes[i] if active[i] else s_act

        def value(x, c=c, n_out=n_out, s_out=s_out):
            return _member_value(model, gamma, c, n_out, s_out, x)

        d = float(final.data_sizes[i])
        if d_grid is None:
            final.data_sizes[i] = round_data_size(d, value)
        else:
            final.data_sizes[i] = round_to_grid(d, d_grid, value)
        final.rewards[i] = _reward_for(model, gamma, c, n_out, s_out, final.data_sizes[i])
        active[i] = final.rewards[i] > 0
        n_act = n_out + int(active[i])
        s_act = s_out + (final.data_sizes[i] if active[i] else 0.0)

    return OptimizerReport(
        final_state=final,
        server_payoff=server_payoff(model, profiles, final, gamma),
        n_participants=int(active_mask(list(profiles), final).sum()),
        iterations_used=used,
        payoff_trace=trace[:used],
        converged=converged,
        wall_time=time.perf_counter() - start,
        order=order,
        relaxed_state=relaxed,
        passes_run=passes,
        participant_trace=n_trace[:used],
        mean_size_trace=size_trace[:used],
    )


def brute_force_oracle(
    model: FittedAccuracyModel,
    profiles: Sequence[LearnerProfile],
    gamma: float,
    d_grid: Sequence[float],
) -> tuple[MechanismState, float]:
    """Exhaustive search over data sizes on ``d_grid`` and cost-or-nothing rewards.

    Enumeration runs over data-size vectors in lexicographic grid order and,
    for each, over participation bit vectors; the first maximizer wins.
    """
    n = len(profiles)
    grid = [float(g) for g in d_grid]
    if n < 1 or n > 6 or len(grid) < 1 or len(grid) > 12:
        raise OracleSizeError(f"oracle limited to 1..6 learners and 1..12 grid points, got {n} and {len(grid)}")
    costs = np.array([p.unit_cost for p in profiles])
    sizes = np.array(list(itertools.product(grid, repeat=n)), dtype=float)
    params = model.params
    best_key, best_val, best = None, -math.inf, None
    for m_index, bits in enumerate(itertools.product((0, 1), repeat=n)):
        mask = np.array(bits, dtype=bool)
        member = (sizes > 0) & mask
        count = member.sum(axis=1)
        total = np.where(member, sizes, 0.0).sum(axis=1)
        paid = (np.where(member, sizes, 0.0) * costs).sum(axis=1)
        acc = np.zeros(len(sizes))
        has = count > 0
        acc[has] = _evaluate(params, count[has].astype(float), total[has])
        values = gamma * acc - paid
        r = int(np.argmax(values))
        v = float(values[r])
        key = (r, m_index)
        if v > best_val or (v == best_val and key < best_key):
            best_key, best_val = key, v
            rewards = np.where(member[r], sizes[r] * costs, 0.0)
            best = MechanismState(rewards, sizes[r].copy())
    return best, best_val
