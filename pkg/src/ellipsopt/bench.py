"""Benchmark harness: cut solver vs projected SGD on logistic problems.

One experiment runs both solvers over shared seeds. Per seed it builds a
dataset (synthetic or from CSV), splits train/test, fits the ERM reference,
then traces each solver's test loss against the iteration count. Artifacts
per experiment: one trace CSV per (solver, seed), a summary table covering
every sweep configuration, and a key=value manifest that doubles as a
config file for byte-identical reruns.

Iteration counts and total oracle draws are reported side by side: the cut
solver takes far fewer iterations but each one consumes a large batch, so
neither axis alone tells the story.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .oracles import required_batch_size
from .problems import (
    LogisticProblem,
    erm_reference,
    generate_synthetic,
    load_dataset_csv,
    split_train_test,
)
from .reporting import SolverReport, format_float, write_trace_csv
from .sgd import DivergedError, SgdConfig, default_step_grid, sgd_run
from .solver import SolverConfig, estimate_value_range, iteration_budget, solve

SOLVER_NAMES = ("ellipsoid", "sgd")
THRESHOLDS = (1e-1, 1e-2, 1e-3)

SUMMARY_COLUMNS = [
    "solver", "seed", "step_size", "batch_size", "iterations",
    "iters_to_1e-1", "iters_to_1e-2", "iters_to_1e-3",
    "oracle_calls", "eval_calls", "wall_time_s", "final_test_loss",
]


class InfeasibleConfigError(ValueError):
    """Config asks for something no run could satisfy (before any file IO)."""


@dataclass(frozen=True)
class BenchConfig:
    """Experiment description; every field maps to one manifest key."""

    m: int = 50_000
    n: int = 20
    csv: str | None = None
    intercept: bool = True
    solvers: tuple[str, ...] = ("ellipsoid", "sgd")
    seeds: tuple[int, ...] = (0,)
    eps: float = 0.05
    beta: float = 0.1
    sigma: float | None = None
    batch_size: int | None = 4096
    eval_batch_size: int | None = None
    max_iters: int | None = None
    sgd_batch_size: int = 16
    sgd_iterations: int | None = None
    sweep: tuple[float, ...] | None = None
    test_fraction: float = 0.2
    weight_radius: float = 10.0
    erm_tol: float = 1e-4
    workers: int = 1
    parallel_seeds: bool = False
    out_dir: str = "bench-out"

    def __post_init__(self) -> None:
        if not self.solvers:
            raise InfeasibleConfigError("select at least one solver")
        bad = [s for s in self.solvers if s not in SOLVER_NAMES]
        if bad:
            raise InfeasibleConfigError(f"unknown solver(s) {bad}; choose from {SOLVER_NAMES}")
        if not self.seeds:
            raise InfeasibleConfigError("provide at least one seed")
        if any(s < 0 for s in self.seeds):
            raise InfeasibleConfigError("seeds must be non-negative")
        if self.eps <= 0:
            raise InfeasibleConfigError("eps must be positive")
        if not 0.0 < self.beta < 1.0:
            raise InfeasibleConfigError("beta must lie strictly inside (0, 1)")
        if self.csv is None and (self.m < 10 or self.n < 2):
            raise InfeasibleConfigError("synthetic data needs m >= 10 and n >= 2")
        if not 0.0 < self.test_fraction < 1.0:
            raise InfeasibleConfigError("test fraction must lie strictly inside (0, 1)")
        if self.workers < 1:
            raise InfeasibleConfigError("worker count must be at least 1")
        for name in ("batch_size", "eval_batch_size", "max_iters", "sgd_iterations"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise InfeasibleConfigError(f"{name} must be at least 1 when given")
        if self.sgd_batch_size < 1:
            raise InfeasibleConfigError("sgd_batch_size must be at least 1")
        if self.erm_tol <= 0 or self.weight_radius <= 0:
            raise InfeasibleConfigError("erm_tol and weight_radius must be positive")
        if self.sigma is not None and self.sigma < 0:
            raise InfeasibleConfigError("sigma must be non-negative when given")


@dataclass
class RunRow:
    """One summary line: a single solver configuration on a single seed."""

    solver: str
    seed: int
    step_size: float | None
    batch_size: int
    iterations: int
    crossings: tuple[int | None, int | None, int | None]
    oracle_calls: int
    eval_calls: int
    wall_time_s: float | None
    final_test_loss: float
    report: SolverReport | None = None

    def cells(self) -> list[str]:
        return [
            self.solver,
            str(self.seed),
            "" if self.step_size is None else format_float(self.step_size),
            str(self.batch_size),
            str(self.iterations),
            *("" if c is None else str(c) for c in self.crossings),
            str(self.oracle_calls),
            str(self.eval_calls),
            "" if self.wall_time_s is None else f"{self.wall_time_s:.3f}",
            format_float(self.final_test_loss),
        ]


@dataclass
class SeedOutcome:
    seed: int
    f_star_train: float
    f_star_test: float
    sigma: float
    value_range: float
    iterations: int
    theory_batch_size: int | None
    sweep: tuple[float, ...]
    rows: list[RunRow] = field(default_factory=list)
    ordering_ok: bool | None = None


@dataclass
class ExperimentOutcome:
    config: BenchConfig
    seed_outcomes: list[SeedOutcome]
    ordering_ok: bool
    trace_paths: list[Path]
    summary_path: Path
    manifest_path: Path


def first_crossings(curve, f_star: float, thresholds=THRESHOLDS):
    """First iteration index where the curve dips to f_star + t, per t."""
    values = np.asarray(curve, dtype=np.float64)
    out: list[int | None] = []
    for t in thresholds:
        hits = np.nonzero(values <= f_star + t)[0]
        out.append(int(hits[0]) if hits.size else None)
    return tuple(out)


def running_best_test_curve(records, test_problem: LogisticProblem) -> np.ndarray:
    """Test loss of the point the cut solver would return after each step.

    The anytime output is the feasible center with the lowest recorded
    estimate so far; the test loss is only re-evaluated when that center
    changes, so the curve costs one full test pass per improvement.
    """
    best_estimate = math.inf
    current = math.inf
    out = np.empty(len(records))
    for i, rec in enumerate(records):
        if rec.feasible and rec.f_estimate is not None and rec.f_estimate < best_estimate:
            best_estimate = rec.f_estimate
            current = float(test_problem.objective(rec.center))
        out[i] = current
    return out


def iterate_test_curve(records, test_problem: LogisticProblem, chunk: int = 512) -> np.ndarray:
    """Test loss of every recorded iterate (SGD's anytime output)."""
    centers = np.vstack([rec.center for rec in records])
    parts = [
        test_problem.objective_many(centers[lo : lo + chunk])
        for lo in range(0, centers.shape[0], chunk)
    ]
    return np.concatenate(parts)


def _resolve_theory_batch(sigma: float, diameter: float, eps: float, beta: float, budget: int):
    try:
        return required_batch_size(sigma, diameter, eps, beta / (2.0 * max(budget, 1)))
    except ValueError as exc:
        raise InfeasibleConfigError(str(exc)) from exc


def _load_seed_data(config: BenchConfig, seed: int):
    if config.csv is not None:
        dataset = load_dataset_csv(config.csv)
    else:
        dataset, _ = generate_synthetic(config.m, config.n, seed=seed, intercept=config.intercept)
    return split_train_test(dataset, config.test_fraction, seed=seed)


def _run_seed(config: BenchConfig, seed: int, clock: bool) -> SeedOutcome:
    train, test = _load_seed_data(config, seed)
    problem = LogisticProblem(train, weight_radius=config.weight_radius)
    test_problem = LogisticProblem(test, weight_radius=config.weight_radius)
    ball = problem.feasible_set
    diameter = ball.diameter
    oracle = problem.oracle()

    sigma = config.sigma if config.sigma is not None else problem.fitted_sigma
    value_range = estimate_value_range(oracle, ball, seed=seed, workers=config.workers)
    budget = config.max_iters
    if budget is None:
        budget = iteration_budget(ball.dimension, diameter, value_range,
                                  ball.inner_radius, config.eps)
    theory_batch: int | None
    if config.batch_size is None:
        theory_batch = _resolve_theory_batch(sigma, diameter, config.eps, config.beta, budget)
        batch_size = theory_batch
    else:
        try:
            theory_batch = _resolve_theory_batch(sigma, diameter, config.eps, config.beta, budget)
        except InfeasibleConfigError:
            theory_batch = None
        batch_size = config.batch_size
    sweep = config.sweep if config.sweep is not None else default_step_grid(diameter, value_range)
    sgd_iters = config.sgd_iterations if config.sgd_iterations is not None else max(budget, 1)

    w_star, f_star_train = erm_reference(problem, tol=config.erm_tol, seed=seed)
    f_star_test = float(test_problem.objective(w_star))

    outcome = SeedOutcome(
        seed=seed,
        f_star_train=f_star_train,
        f_star_test=f_star_test,
        sigma=sigma,
        value_range=value_range,
        iterations=budget,
        theory_batch_size=theory_batch,
        sweep=tuple(sweep),
    )

    if "ellipsoid" in config.solvers:
        solver_cfg = SolverConfig(
            eps=config.eps,
            beta=config.beta,
            sigma=sigma,
            seed=seed,
            workers=config.workers,
            batch_size=batch_size,
            eval_batch_size=config.eval_batch_size,
            max_iterations=budget,
            value_range=value_range,
        )
        t0 = time.perf_counter()
        report = solve(oracle, ball, solver_cfg)
        wall = time.perf_counter() - t0
        curve = running_best_test_curve(report.records, test_problem)
        outcome.rows.append(
            RunRow(
                solver="ellipsoid",
                seed=seed,
                step_size=None,
                batch_size=report.batch_size,
                iterations=report.iterations,
                crossings=first_crossings(curve, f_star_test),
                oracle_calls=report.grad_draws,
                eval_calls=report.eval_draws,
                wall_time_s=wall if clock else None,
                final_test_loss=float(curve[-1]),
                report=report,
            )
        )

    if "sgd" in config.solvers:
        for alpha in sweep:
            sgd_cfg = SgdConfig(
                step_size=alpha,
                iterations=sgd_iters,
                batch_size=config.sgd_batch_size,
                seed=seed,
                workers=config.workers,
                report="last",
            )
            t0 = time.perf_counter()
            try:
                report = sgd_run(oracle, ball, sgd_cfg)
            except DivergedError:
                outcome.rows.append(
                    RunRow(
                        solver="sgd",
                        seed=seed,
                        step_size=alpha,
                        batch_size=config.sgd_batch_size,
                        iterations=0,
                        crossings=(None, None, None),
                        oracle_calls=0,
                        eval_calls=0,
                        wall_time_s=(time.perf_counter() - t0) if clock else None,
                        final_test_loss=math.inf,
                        report=None,
                    )
                )
                continue
            wall = time.perf_counter() - t0
            curve = iterate_test_curve(report.records, test_problem)
            outcome.rows.append(
                RunRow(
                    solver="sgd",
                    seed=seed,
                    step_size=alpha,
                    batch_size=report.batch_size,
                    iterations=report.iterations,
                    crossings=first_crossings(curve, f_star_test),
                    oracle_calls=report.grad_draws,
                    eval_calls=report.eval_draws,
                    wall_time_s=wall if clock else None,
                    final_test_loss=float(curve[-1]),
                    report=report,
                )
            )

    outcome.ordering_ok = _check_ordering(outcome, config)
    return outcome


def _check_ordering(outcome: SeedOutcome, config: BenchConfig) -> bool | None:
    """Cut solver must hit f*+1e-2 in strictly fewer iterations than every
    SGD configuration; None when only one solver ran (nothing to compare)."""
    if not ("ellipsoid" in config.solvers and "sgd" in config.solvers):
        return None
    ell = [r for r in outcome.rows if r.solver == "ellipsoid"]
    sgd = [r for r in outcome.rows if r.solver == "sgd"]
    if not ell or not sgd:
        return None
    target = ell[0].crossings[1]
    if target is None:
        return False
    return all(r.crossings[1] is None or target < r.crossings[1] for r in sgd)


def _best_sgd_row(rows: list[RunRow]) -> RunRow | None:
    """The sweep configuration whose trace gets archived: earliest to the
    1e-2 threshold, then earliest to 1e-3, then lowest final test loss."""
    candidates = [r for r in rows if r.solver == "sgd" and r.report is not None]
    if not candidates:
        return None
    def key(r: RunRow):
        c2 = math.inf if r.crossings[1] is None else r.crossings[1]
        c3 = math.inf if r.crossings[2] is None else r.crossings[2]
        return (c2, c3, r.final_test_loss)
    return min(candidates, key=key)


def render_summary_csv(rows: list[RunRow]) -> str:
    lines = [",".join(SUMMARY_COLUMNS)]
    lines.extend(",".join(row.cells()) for row in rows)
    return "\n".join(lines) + "\n"


# --- manifest / config file format -----------------------------------------

_BOOL_KEYS = {"intercept", "parallel_seeds"}
_INT_KEYS = {"m", "n", "batch_size", "eval_batch_size", "max_iters",
             "sgd_batch_size", "sgd_iterations", "workers"}
_DERIVABLE_INT_KEYS = {"batch_size", "eval_batch_size", "max_iters", "sgd_iterations"}
_FLOAT_KEYS = {"eps", "beta", "sigma", "test_fraction", "weight_radius", "erm_tol"}
_LIST_INT_KEYS = {"seeds"}
_LIST_FLOAT_KEYS = {"sweep"}
_LIST_STR_KEYS = {"solvers"}
_STR_KEYS = {"csv", "out_dir"}
_CONFIG_KEYS = (_BOOL_KEYS | _INT_KEYS | _FLOAT_KEYS | _LIST_INT_KEYS
                | _LIST_FLOAT_KEYS | _LIST_STR_KEYS | _STR_KEYS)


def read_key_value_file(path) -> dict[str, str]:
    """Parse a flat key=value file; '#' starts a comment, blanks skipped."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def config_from_mapping(mapping: dict[str, str]) -> BenchConfig:
    """Build a config from string key=value pairs (file or CLI supplied).

    Keys outside the config schema are ignored when prefixed with
    "resolved." or "result." (manifest echo lines); anything else unknown
    is an error. Empty values mean "use the default / derive it".
    """
    kwargs: dict[str, object] = {}
    for key, value in mapping.items():
        if key.startswith(("resolved.", "result.")):
            continue
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        if value == "":
            continue
        try:
            if key in _BOOL_KEYS:
                if value.lower() not in ("true", "false", "0", "1"):
                    raise ValueError("expected true/false")
                kwargs[key] = value.lower() in ("true", "1")
            elif key in _INT_KEYS:
                parsed = int(value)
                # 0 = "derive it" for the knobs whose absence means derived
                if parsed == 0 and key in _DERIVABLE_INT_KEYS:
                    kwargs[key] = None
                else:
                    kwargs[key] = parsed
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key in _LIST_INT_KEYS:
                kwargs[key] = tuple(int(p) for p in value.split(",") if p.strip() != "")
            elif key in _LIST_FLOAT_KEYS:
                kwargs[key] = tuple(float(p) for p in value.split(",") if p.strip() != "")
            elif key in _LIST_STR_KEYS:
                kwargs[key] = tuple(p.strip() for p in value.split(",") if p.strip() != "")
            else:
                kwargs[key] = value
        except ValueError as exc:
            raise ValueError(f"config key {key}={value!r}: {exc}") from exc
    return BenchConfig(**kwargs)


def _config_items(config: BenchConfig) -> list[tuple[str, str]]:
    def fmt(key: str, value) -> str:
        if value is None:
            # 0 round-trips to "derive it" for these; "" would load as the
            # field default, which for batch_size is a fixed size instead
            return "0" if key in _DERIVABLE_INT_KEYS else ""
        if key in _BOOL_KEYS:
            return "true" if value else "false"
        if key in _LIST_INT_KEYS or key in _LIST_STR_KEYS:
            return ",".join(str(v) for v in value)
        if key in _LIST_FLOAT_KEYS:
            return ",".join(format_float(v) for v in value)
        if key in _FLOAT_KEYS:
            return format_float(value)
        return str(value)

    ordered = ["m", "n", "csv", "intercept", "solvers", "seeds", "eps", "beta",
               "sigma", "batch_size", "eval_batch_size", "max_iters",
               "sgd_batch_size", "sgd_iterations", "sweep", "test_fraction",
               "weight_radius", "erm_tol", "workers", "parallel_seeds", "out_dir"]
    return [(key, fmt(key, getattr(config, key))) for key in ordered]


def render_manifest(config: BenchConfig, outcomes: list[SeedOutcome], ordering_ok: bool | None) -> str:
    lines = ["# experiment manifest: the key=value lines below rerun this",
             "# experiment byte-identically via --config (resolved.* and",
             "# result.* lines are informational echoes and are ignored)"]
    lines.extend(f"{k}={v}" for k, v in _config_items(config))
    for oc in outcomes:
        p = f"resolved.seed{oc.seed}"
        lines.append(f"{p}.sigma={format_float(oc.sigma)}")
        lines.append(f"{p}.value_range={format_float(oc.value_range)}")
        lines.append(f"{p}.iterations={oc.iterations}")
        theory = "" if oc.theory_batch_size is None else str(oc.theory_batch_size)
        lines.append(f"{p}.theory_batch_size={theory}")
        lines.append(f"{p}.sweep={','.join(format_float(a) for a in oc.sweep)}")
        lines.append(f"{p}.f_star_train={format_float(oc.f_star_train)}")
        lines.append(f"{p}.f_star_test={format_float(oc.f_star_test)}")
        if oc.ordering_ok is not None:
            lines.append(f"result.seed{oc.seed}.ordering_ok={'true' if oc.ordering_ok else 'false'}")
    if ordering_ok is not None:
        lines.append(f"result.ordering_ok={'true' if ordering_ok else 'false'}")
    return "\n".join(lines) + "\n"


def run_experiment(config: BenchConfig) -> ExperimentOutcome:
    """Run every (solver, seed) pair and write traces, summary, manifest.

    Artifact layout under config.out_dir: ellipsoid-seed<g>.csv and
    sgd-seed<g>.csv per seed (the SGD trace is the best sweep entry),
    summary.csv with one row per sweep configuration, manifest.txt.
    Raises InfeasibleConfigError before writing anything if the config
    cannot run (that includes eps so small the theory batch size
    overflows the float budget while no explicit batch size is given).
    """
    # fail fast on an infeasible derived batch before any file IO;
    # per-seed sigma can only be known later, so probe with sigma given
    if config.batch_size is None and config.sigma is not None:
        _resolve_theory_batch(config.sigma, 2.0 * config.weight_radius, config.eps,
                              config.beta, config.max_iters or 1)

    out_dir = Path(config.out_dir)
    clock = not config.parallel_seeds
    if config.parallel_seeds:
        with ThreadPoolExecutor(max_workers=min(len(config.seeds), 8)) as pool:
            outcomes = list(pool.map(lambda s: _run_seed(config, s, clock), config.seeds))
    else:
        outcomes = [_run_seed(config, seed, clock) for seed in config.seeds]

    out_dir.mkdir(parents=True, exist_ok=True)
    trace_paths: list[Path] = []
    all_rows: list[RunRow] = []
    for oc in outcomes:
        for row in oc.rows:
            all_rows.append(row)
        ell = [r for r in oc.rows if r.solver == "ellipsoid" and r.report is not None]
        if ell:
            path = out_dir / f"ellipsoid-seed{oc.seed}.csv"
            write_trace_csv(path, ell[0].report.records)
            trace_paths.append(path)
        best = _best_sgd_row(oc.rows)
        if best is not None:
            path = out_dir / f"sgd-seed{oc.seed}.csv"
            write_trace_csv(path, best.report.records)
            trace_paths.append(path)

    summary_path = out_dir / "summary.csv"
    summary_path.write_text(render_summary_csv(all_rows), encoding="utf-8")

    verdicts = [oc.ordering_ok for oc in outcomes if oc.ordering_ok is not None]
    ordering_ok = all(verdicts) if verdicts else None
    manifest_path = out_dir / "manifest.txt"
    manifest_path.write_text(render_manifest(config, outcomes, ordering_ok), encoding="utf-8")

    return ExperimentOutcome(
        config=config,
        seed_outcomes=outcomes,
        ordering_ok=bool(ordering_ok) if ordering_ok is not None else True,
        trace_paths=trace_paths,
        summary_path=summary_path,
        manifest_path=manifest_path,
    )
