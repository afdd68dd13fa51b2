"""Experiment pipelines: simulate, fit, optimize, evaluate.

Every pipeline writes CSV files with a fixed column order plus a flat
``key = value`` summary, and echoes the resolved configuration into the output
directory so a run can be reproduced from its own output.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .bagging_sim import SimConfig, simulate_ensemble, uniform_state
from .core_model import LearnerProfile, ServerConfig, active_mask, make_population
from .optimizer import alternate_optimize, brute_force_oracle
from .surrogate import (
    FitError,
    FittedAccuracyModel,
    InsufficientSamplesError,
    UndefinedCorrelationError,
    fit_accuracy_model,
    pearson,
)

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


def _log_grid(lo: float, hi: float, n: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.geomspace(lo, hi, n))


@dataclass(frozen=True)
class PopulationConfig:
    n_learners: int = 100
    cost_low: float = 1e-5
    cost_high: float = 1e-3
    alpha_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_learners < 1:
            raise ValueError("n_learners must be >= 1")
        if not 0 < self.cost_low <= self.cost_high:
            raise ValueError("cost bounds must satisfy 0 < cost_low <= cost_high (alpha + beta must be > 0)")
        if not 0 < self.alpha_fraction < 1:
            raise ValueError("alpha_fraction must lie in (0, 1)")

    def draw(self, seed: Any = None) -> list[LearnerProfile]:
        return make_population(
            self.n_learners, self.cost_low, self.cost_high, self.alpha_fraction,
            seed=self.seed if seed is None else seed,
        )


@dataclass(frozen=True)
class SweepConfig:
    """Grids for the sweeps.

    ``parameter``/``values`` drive the valuation sweep; ``n_values`` and
    ``d_values`` span the accuracy grid; ``seeds`` and ``convergence_gammas``
    drive the convergence study.
    """

    parameter: str = "gamma"
    values: tuple[float, ...] = _log_grid(500.0, 8000.0, 16)
    n_values: tuple[int, ...] = (5, 10, 20, 40, 60, 80, 100)
    d_values: tuple[int, ...] = (200, 400, 600, 800, 1000)
    seeds: int = 20
    convergence_gammas: tuple[float, ...] = (500.0, 1000.0, 2000.0, 4000.0, 8000.0)

    def __post_init__(self):
        if self.parameter != "gamma":
            raise ValueError(f"only the 'gamma' sweep is supported, got {self.parameter!r}")
        for name in ("values", "n_values", "d_values", "convergence_gammas"):
            vals = getattr(self, name)
            if not vals or not all(math.isfinite(v) for v in vals):
                raise ValueError(f"{name} must be a non-empty list of finite values")
        if any(v < 0 for v in self.values) or any(v < 0 for v in self.convergence_gammas):
            raise ValueError("gamma values must be >= 0")
        if any(n < 1 for n in self.n_values) or any(d < 1 for d in self.d_values):
            raise ValueError("n_values and d_values must be >= 1")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")


@dataclass(frozen=True)
class ModelConfig:
    """Which fitted model drives the optimizer, and fit settings."""

    objective: str = "accuracy"
    restarts: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.objective not in ("accuracy", "surrogate"):
            raise ValueError("objective must be 'accuracy' or 'surrogate'")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class OracleConfig:
    """Random small instances for the exhaustive-search comparison.

    Unit costs and gamma are drawn log-uniformly from their ranges.
    """

    instances: int = 50
    n_values: tuple[int, ...] = (2, 3, 4)
    d_grid: tuple[int, ...] = (0, 250, 500, 750, 1000)
    cost_low: float = 1e-3
    cost_high: float = 1.0
    gamma_low: float = 500.0
    gamma_high: float = 8000.0
    seed: int = 0

    def __post_init__(self):
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        if not self.n_values or any(not 1 <= n <= 6 for n in self.n_values):
            raise ValueError("oracle n_values must lie in [1, 6]")
        if not 1 <= len(self.d_grid) <= 12 or any(d < 0 for d in self.d_grid):
            raise ValueError("d_grid must hold 1..12 non-negative sizes")
        if not 0 < self.cost_low <= self.cost_high:
            raise ValueError("cost bounds must satisfy 0 < cost_low <= cost_high")
        if not 0 <= self.gamma_low <= self.gamma_high:
            raise ValueError("gamma bounds must satisfy 0 <= gamma_low <= gamma_high")


@dataclass(frozen=True)
class ExperimentConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    server: ServerConfig = field(default_factory=ServerConfig)
    population: PopulationConfig = field(default_factory=PopulationConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    output_dir: str = "results"

    def with_seed(self, seed: int) -> ExperimentConfig:
        """Use ``seed`` as the master seed of every random component."""
        return replace(
            self,
            sim=replace(self.sim, seed=seed),
            server=replace(self.server, seed=seed),
            population=replace(self.population, seed=seed),
            model=replace(self.model, seed=seed),
            oracle=replace(self.oracle, seed=seed),
        )

    def to_text(self) -> str:
        lines = []
        for section in SECTIONS:
            obj = getattr(self, section)
            for f in fields(obj):
                lines.append(f"{section}.{f.name} = {_format_value(getattr(obj, f.name))}")
        lines.append(f"output.dir = {self.output_dir}")
        return "\n".join(lines) + "\n"


SECTIONS = ("sim", "server", "population", "sweep", "model", "oracle")
_NULLABLE = {("sim", "difficulty_alpha"), ("sim", "difficulty_beta")}


def _format_value(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(raw: str, default: Any, nullable: bool) -> Any:
    if nullable and raw.lower() == "none":
        return None
    if isinstance(default, tuple):
        kind = type(default[0]) if default else float
        return tuple(_convert(x.strip(), kind(), False) for x in raw.split(",") if x.strip())
    if isinstance(default, bool):
        if raw.lower() not in ("true", "false"):
            raise ValueError(f"expected true/false, got {raw!r}")
        return raw.lower() == "true"
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float) or default is None:
        return float(raw)
    return raw


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse ``section.key = value`` lines; ``#`` starts a comment."""
    base = ExperimentConfig()
    assigned: dict[str, dict[str, tuple[Any, int]]] = {s: {} for s in SECTIONS}
    output_dir = base.output_dir
    unknown = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: malformed line, expected 'section.key = value': {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "output.dir":
            output_dir = value
            continue
        section, _, name = key.partition(".")
        if section not in assigned or name not in {f.name for f in fields(getattr(base, section))}:
            unknown.append(f"line {lineno}: {key}")
            continue
        default = getattr(getattr(base, section), name)
        try:
            assigned[section][name] = (_convert(value, default, (section, name) in _NULLABLE), lineno)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    if unknown:
        raise ConfigError("unknown keys: " + "; ".join(unknown))

    built = {}
    for section in SECTIONS:
        values = {k: v for k, (v, _) in assigned[section].items()}
        try:
            built[section] = replace(getattr(base, section), **values)
        except ValueError as exc:
            lineno = _blame(getattr(base, section), assigned[section])
            where = f"line {lineno}: " if lineno else ""
            raise ConfigError(f"{where}{section}: {exc}") from None
    return ExperimentConfig(**built, output_dir=output_dir)


def _blame(default_obj, assigned: dict[str, tuple[Any, int]]) -> int | None:
    """Line of the first key whose removal makes the section valid."""
    items = sorted(assigned.items(), key=lambda kv: kv[1][1])
    for name, (_, lineno) in items:
        rest = {k: v for k, (v, _) in assigned.items() if k != name}
        try:
            replace(default_obj, **rest)
        except ValueError:
            continue
        return lineno
    return items[-1][1][1] if items else None


def parse_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text())


# ---------------------------------------------------------------------------
# output helpers


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    path.write_text(buf.getvalue())


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_summary(path: Path, items: dict[str, Any]) -> None:
    path.write_text("".join(f"{k} = {_cell(v)}\n" for k, v in items.items()))


def read_summary(path: str | Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _prepare(config: ExperimentConfig, out_dir: str | Path | None) -> Path:
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config_echo.txt").write_text(config.to_text())
    return out


def model_path(out_dir: str | Path, objective: str) -> Path:
    return Path(out_dir) / f"model_{objective}.txt"


# ---------------------------------------------------------------------------
# accuracy sweep

ACCURACY_COLUMNS = (
    "n_learners", "n_participants", "mean_data_size", "total_data",
    "surrogate_f", "true_accuracy", "diversity_term", "precision_term",
    "surrogate_f_se", "true_accuracy_se", "diversity_term_se", "precision_term_se",
    "mean_precision", "mean_precision_se", "union_size", "trials",
)


def _sweep_cell(args) -> list[Any]:
    n, d, sim, cell_seed = args
    profiles, state = uniform_state(n, d)
    s = simulate_ensemble(profiles, state, sim, rng=np.random.default_rng(cell_seed))
    return [
        n, s.n_participants, float(d), float(n * d),
        s.surrogate, s.true_accuracy, s.diversity, s.precision,
        s.surrogate_se, s.true_accuracy_se, s.diversity_se, s.precision_se,
        s.mean_precision, s.mean_precision_se, s.union_size, sim.trials,
    ]


@dataclass
class AccuracySweepResult:
    rows: list[list[Any]]
    surrogate_model: FittedAccuracyModel | None
    accuracy_model: FittedAccuracyModel | None
    pearson: float
    summary: dict[str, Any]


def fit_sweep(rows: Sequence[Sequence[Any]], model_cfg: ModelConfig) -> tuple[dict, dict[str, Any]]:
    """Fit the surrogate (free shape) and accuracy (monotone shape) surfaces."""
    col = {name: i for i, name in enumerate(ACCURACY_COLUMNS)}
    models: dict[str, FittedAccuracyModel | None] = {}
    info: dict[str, Any] = {}
    for target, column, shape in (("surrogate", "surrogate_f", "free"), ("accuracy", "true_accuracy", "monotone")):
        samples = [(float(r[col["n_participants"]]), float(r[col["total_data"]]), float(r[col[column]])) for r in rows]
        try:
            m = fit_accuracy_model(samples, restarts=model_cfg.restarts, seed=model_cfg.seed, shape=shape)
            models[target] = m
            info[f"fit_{target}_status"] = "ok"
            info[f"fit_{target}_rmse"] = m.rmse
        except InsufficientSamplesError as exc:
            models[target] = None
            info[f"fit_{target}_status"] = "insufficient_samples"
            info[f"fit_{target}_error"] = str(exc)
        except FitError as exc:
            models[target] = None
            info[f"fit_{target}_status"] = "failed"
            info[f"fit_{target}_error"] = str(exc)
            info[f"fit_{target}_rmse"] = exc.rmse
    return models, info


def run_accuracy_sweep(config: ExperimentConfig, out_dir: str | Path | None = None, jobs: int = 1) -> AccuracySweepResult:
    """Simulate every (learner count, data size) cell and fit both surfaces.

    Cells run in parallel when ``jobs > 1``; each cell has its own derived
    seed and rows are written in grid order, so output does not depend on
    scheduling.
    """
    out = _prepare(config, out_dir)
    cells = [
        (n, d, config.sim, [config.sim.seed, idx])
        for idx, (n, d) in enumerate((n, d) for n in config.sweep.n_values for d in config.sweep.d_values)
    ]
    start = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    _write_csv(out / "accuracy_sweep.csv", ACCURACY_COLUMNS, rows)
    log.info("simulated %d cells in %.1fs", len(rows), time.perf_counter() - start)

    models, info = fit_sweep(rows, config.model)
    for target, m in models.items():
        if m is not None:
            m.save(model_path(out, target))
    sur = [r[4] for r in rows]
    acc = [r[5] for r in rows]
    try:
        r = pearson(sur, acc)
    except (UndefinedCorrelationError, ValueError):
        r = math.nan
    shape = check_accuracy_shape(rows, config.sweep.n_values, config.sweep.d_values)
    summary = {
        "cells": len(rows),
        "trials": config.sim.trials,
        "seed": config.sim.seed,
        "pearson_surrogate_vs_accuracy": r,
        **info,
        "shape_violations": len(shape),
    }
    _write_summary(out / "accuracy_summary.txt", summary)
    return AccuracySweepResult(rows, models["surrogate"], models["accuracy"], r, summary)


def refit(config: ExperimentConfig, csv_path: str | Path, out_dir: str | Path | None = None) -> dict[str, Any]:
    """Refit both surfaces from an existing accuracy-sweep CSV."""
    out = _prepare(config, out_dir)
    records = read_csv(csv_path)
    rows = [[float(rec[c]) for c in ACCURACY_COLUMNS] for rec in records]
    models, info = fit_sweep(rows, config.model)
    for target, m in models.items():
        if m is not None:
            m.save(model_path(out, target))
    _write_summary(out / "fit_summary.txt", {"source": str(csv_path), **info})
    return {"models": models, **info}


def check_accuracy_shape(
    rows: Sequence[Sequence[Any]], n_values: Sequence[int], d_values: Sequence[int], k: float = 2.0
) -> list[str]:
    """Monotonicity and concavity of true accuracy along each grid axis.

    Along each axis, consecutive increments must be >= -k standard errors and
    the change in slope between neighbouring intervals must be <= +k standard
    errors (slopes scaled to the later interval's width). Returns a
    description of every violation.
    """
    table = {(int(r[0]), int(r[2])): (float(r[5]), float(r[9])) for r in rows}
    problems = []

    def check_line(points: list[tuple[float, float, float]], label: str):
        for (x0, y0, s0), (x1, y1, s1) in zip(points, points[1:]):
            if y1 - y0 < -k * math.hypot(s0, s1):
                problems.append(f"{label}: decrease {y0:.4f}->{y1:.4f} at {x0:g}->{x1:g}")
        for (x0, y0, s0), (x1, y1, s1), (x2, y2, s2) in zip(points, points[1:], points[2:]):
            w = (x2 - x1) / (x1 - x0)
            second = (y2 - y1) - w * (y1 - y0)
            se = math.sqrt(s2**2 + ((1 + w) * s1) ** 2 + (w * s0) ** 2)
            if second > k * se:
                problems.append(f"{label}: convex step {second:.4f} > {k}se at {x1:g}")

    for d in d_values:
        check_line([(n, *table[(n, d)]) for n in n_values], f"D={d}")
    for n in n_values:
        check_line([(d, *table[(n, d)]) for d in d_values], f"N={n}")
    return problems


# ---------------------------------------------------------------------------
# optimization pipelines


def run_optimize(config: ExperimentConfig, model: FittedAccuracyModel, out_dir: str | Path | None = None):
    out = _prepare(config, out_dir)
    profiles = config.population.draw()
    report = alternate_optimize(model, profiles, config.server)
    (out / "optimize_report.txt").write_text(report.to_text())
    (out / "optimize_trace.csv").write_text(report.trace_csv())
    (out / "optimize_state.csv").write_text(report.state_csv(profiles))
    return report


CONVERGENCE_COLUMNS = (
    "seed", "gamma", "iterations_used", "passes_run", "converged",
    "n_participants", "mean_data_size", "server_payoff", "trace_non_decreasing",
)
TRACE_COLUMNS = ("seed", "gamma", "iteration", "server_payoff", "n_participants", "mean_data_size")


def _participant_stats(profiles, state) -> tuple[int, float]:
    mask = active_mask(list(profiles), state)
    n = int(mask.sum())
    return n, (math.fsum(state.data_sizes[mask]) / n if n else 0.0)


def trace_is_non_decreasing(trace: Sequence[float], slack: float = 1e-9) -> bool:
    return all(b >= a - slack * max(1.0, abs(a)) for a, b in zip(trace, trace[1:]))


@dataclass
class ConvergenceResult:
    rows: list[list[Any]]
    reports: list
    summary: dict[str, Any]


def run_convergence_study(config: ExperimentConfig, model: FittedAccuracyModel,
                          out_dir: str | Path | None = None) -> ConvergenceResult:
    """Alternating optimization for every (seed, gamma) pair from R=0, D=init."""
    out = _prepare(config, out_dir)
    rows, trace_rows, reports = [], [], []
    for s in range(config.sweep.seeds):
        profiles = config.population.draw(seed=[config.population.seed, s])
        for gamma in config.sweep.convergence_gammas:
            server = replace(config.server, gamma=float(gamma))
            rep = alternate_optimize(model, profiles, server)
            reports.append(rep)
            n, mean_d = _participant_stats(profiles, rep.final_state)
            rows.append([s, float(gamma), rep.iterations_used, rep.passes_run, rep.converged,
                         n, mean_d, rep.server_payoff, trace_is_non_decreasing(rep.payoff_trace)])
            for t, (v, np_, md) in enumerate(zip(rep.payoff_trace, rep.participant_trace, rep.mean_size_trace), 1):
                trace_rows.append([s, float(gamma), t, v, np_, md])
    _write_csv(out / "convergence.csv", CONVERGENCE_COLUMNS, rows)
    _write_csv(out / "convergence_traces.csv", TRACE_COLUMNS, trace_rows)
    its = [r[2] for r in rows]
    summary = {
        "runs": len(rows),
        "converged_fraction": sum(r[4] for r in rows) / len(rows),
        "mean_iterations": math.fsum(its) / len(its),
        "max_iterations": max(its),
        "all_traces_non_decreasing": all(r[8] for r in rows),
    }
    _write_summary(out / "convergence_summary.txt", summary)
    return ConvergenceResult(rows, reports, summary)


GAMMA_COLUMNS = (
    "gamma", "n_participants", "mean_data_size", "total_data", "server_payoff",
    "iterations_used", "converged",
    "true_accuracy", "true_accuracy_se", "diversity_term", "diversity_term_se",
    "surrogate_f", "surrogate_f_se", "precision_term", "precision_term_se",
)


def rise_then_fall(values: Sequence[float], errors: Sequence[float]) -> bool:
    """True if some i < j < k has values[j] above both values[i] and values[k]
    by more than the combined standard error."""
    pts = [(v, e) for v, e in zip(values, errors) if math.isfinite(v) and math.isfinite(e)]
    for j, (vj, ej) in enumerate(pts):
        rises = any(vj - vi > math.hypot(ei, ej) for vi, ei in pts[:j])
        falls = any(vj - vk > math.hypot(ek, ej) for vk, ek in pts[j + 1:])
        if rises and falls:
            return True
    return False


@dataclass
class GammaSweepResult:
    rows: list[list[Any]]
    summary: dict[str, Any]


def run_gamma_sweep(config: ExperimentConfig, model: FittedAccuracyModel,
                    out_dir: str | Path | None = None) -> GammaSweepResult:
    """Optimize at each gamma, then evaluate the rounded mechanism by simulation."""
    out = _prepare(config, out_dir)
    profiles = config.population.draw()
    rows = []
    for idx, gamma in enumerate(config.sweep.values):
        rep = alternate_optimize(model, profiles, replace(config.server, gamma=float(gamma)))
        sim = simulate_ensemble(profiles, rep.final_state, config.sim,
                                rng=np.random.default_rng([config.sim.seed, idx]))
        n, mean_d = _participant_stats(profiles, rep.final_state)
        rows.append([
            float(gamma), n, mean_d, mean_d * n, rep.server_payoff, rep.iterations_used, rep.converged,
            sim.true_accuracy, sim.true_accuracy_se, sim.diversity, sim.diversity_se,
            sim.surrogate, sim.surrogate_se, sim.precision, sim.precision_se,
        ])
    _write_csv(out / "gamma_sweep.csv", GAMMA_COLUMNS, rows)
    n_p = [r[1] for r in rows]
    acc = [(r[7], r[8]) for r in rows]
    summary = {
        "points": len(rows),
        "n_participants_non_decreasing": all(b >= a for a, b in zip(n_p, n_p[1:])),
        "accuracy_non_decreasing_2se": all(
            b[0] >= a[0] - 2 * math.hypot(a[1] if math.isfinite(a[1]) else 0.0, b[1] if math.isfinite(b[1]) else 0.0)
            for a, b in zip(acc, acc[1:])
        ),
        "diversity_rise_then_fall": rise_then_fall([r[9] for r in rows], [r[10] for r in rows]),
    }
    _write_summary(out / "gamma_summary.txt", summary)
    return GammaSweepResult(rows, summary)


ORACLE_COLUMNS = (
    "instance", "n_learners", "gamma", "oracle_payoff", "alternating_payoff",
    "ratio", "gap", "oracle_participants", "alternating_participants",
)


@dataclass
class OracleCompareResult:
    rows: list[list[Any]]
    summary: dict[str, Any]


def oracle_instance(cfg: OracleConfig, index: int) -> tuple[list[LearnerProfile], float]:
    rng = np.random.default_rng([cfg.seed, index])
    n = int(rng.choice(cfg.n_values))
    gamma = float(np.exp(rng.uniform(math.log(max(cfg.gamma_low, 1e-12)), math.log(max(cfg.gamma_high, 1e-12)))))
    costs = np.exp(rng.uniform(math.log(cfg.cost_low), math.log(cfg.cost_high), size=n))
    profiles = [LearnerProfile(id=i, alpha=float(c) / 2, beta=float(c) / 2) for i, c in enumerate(costs)]
    return profiles, gamma


def run_oracle_compare(config: ExperimentConfig, model: FittedAccuracyModel,
                       out_dir: str | Path | None = None) -> OracleCompareResult:
    """Exhaustive search vs alternating optimization rounded onto the same grid."""
    out = _prepare(config, out_dir)
    cfg = config.oracle
    rows = []
    for idx in range(cfg.instances):
        profiles, gamma = oracle_instance(cfg, idx)
        best_state, best = brute_force_oracle(model, profiles, gamma, cfg.d_grid)
        server = replace(config.server, gamma=gamma, d_max=float(max(max(cfg.d_grid), 1)),
                         init_data_size=min(config.server.init_data_size, float(max(max(cfg.d_grid), 1))))
        rep = alternate_optimize(model, profiles, server, d_grid=cfg.d_grid)
        ratio = rep.server_payoff / best if best > 0 else (1.0 if rep.server_payoff >= best else 0.0)
        rows.append([idx, len(profiles), gamma, best, rep.server_payoff, ratio, best - rep.server_payoff,
                     _participant_stats(profiles, best_state)[0], rep.n_participants])
    ratios = [r[5] for r in rows]
    summary = {
        "instances": len(rows),
        "never_exceeds_oracle": all(r[4] <= r[3] + 1e-9 * max(1.0, abs(r[3])) for r in rows),
        "fraction_within_90pct": sum(v >= 0.9 for v in ratios) / len(ratios),
        "mean_ratio": math.fsum(ratios) / len(ratios),
        "min_ratio": min(ratios),
    }
    _write_csv(out / "oracle_compare.csv", ORACLE_COLUMNS, rows)
    _write_summary(out / "oracle_summary.txt", summary)
    return OracleCompareResult(rows, summary)


def measure_complexity(model: FittedAccuracyModel, config: ExperimentConfig,
                       sizes: Sequence[int] = (100, 200, 400, 800), repeats: int = 3) -> dict[str, Any]:
    """Wall time per optimizer pass against population size, and its log-log slope.

    Time per pass fixes the iteration count, leaving the dependence on N.
    The best of ``repeats`` runs is used to damp timer noise.
    """
    per_pass = []
    for n in sizes:
        profiles = replace(config.population, n_learners=n).draw()
        best = math.inf
        for _ in range(repeats):
            rep = alternate_optimize(model, profiles, config.server)
            best = min(best, rep.wall_time / rep.passes_run)
        per_pass.append(best)
    slope = float(np.polyfit(np.log(sizes), np.log(per_pass), 1)[0])
    return {"sizes": list(sizes), "seconds_per_pass": per_pass, "slope": slope,
            "within_band": 0.8 <= slope <= 1.3}
