"""Projected minibatch SGD baseline.

Shares the oracle, batch, trace and report machinery with the cut-based
solver so the two produce directly comparable runs: equal seeds consume
identical sample streams at equal (iteration, batch-element) keys.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import FeasibleSet, Vector
from .oracles import BatchSpec, StochasticGradOracle, minibatch_gradient
from .reporting import CUT_SGD, TERMINATION_BUDGET, IterationRecord, SolverReport
from .solver import _select_candidates

SCHEDULE_CONSTANT = "constant"
SCHEDULE_INV_SQRT = "inv-sqrt"
REPORT_MODES = ("best", "last", "average")


class DivergedError(RuntimeError):
    """Raised when iterates blow past the divergence guard (bad step size)."""


@dataclass(frozen=True)
class SgdConfig:
    step_size: float
    iterations: int
    batch_size: int = 16
    schedule: str = SCHEDULE_CONSTANT
    seed: int = 0
    workers: int = 1
    report: str = "best"
    eval_batch_size: int | None = None
    divergence_factor: float = 1e3

    def __post_init__(self) -> None:
        if self.step_size < 0:
            raise ValueError("step size must be non-negative")
        if self.iterations < 1:
            raise ValueError("iteration count must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.schedule not in (SCHEDULE_CONSTANT, SCHEDULE_INV_SQRT):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.workers < 1:
            raise ValueError("worker count must be at least 1")
        if self.report not in REPORT_MODES:
            raise ValueError(f"report mode must be one of {REPORT_MODES}")
        if self.eval_batch_size is not None and self.eval_batch_size < 1:
            raise ValueError("eval_batch_size must be at least 1 when given")
        if self.divergence_factor <= 0:
            raise ValueError("divergence factor must be positive")


def default_step_grid(diameter: float, value_range: float) -> tuple[float, ...]:
    """Step-size sweep {1e-3, 1e-2, 1e-1, 0.5, 1} * (D / B)."""
    if diameter <= 0 or value_range <= 0:
        raise ValueError("diameter and value range must be positive")
    base = diameter / value_range
    return tuple(base * m for m in (0.001, 0.01, 0.1, 0.5, 1.0))


def sgd_run(
    oracle: StochasticGradOracle,
    feasible_set: FeasibleSet,
    config: SgdConfig,
    start=None,
) -> SolverReport:
    """Iterate theta <- project(theta - alpha_k * minibatch gradient).

    Starts from the bounding ball's center projected onto the set unless
    ``start`` is given. The reported point follows ``config.report``: the
    best recorded iterate by estimated objective (default, matching the cut
    solver's semantics), the last iterate, or the average iterate.
    """
    n = feasible_set.dimension
    if oracle.dimension != n:
        raise ValueError(f"oracle dimension {oracle.dimension} does not match the set's {n}")
    ball = feasible_set.bounding_ball
    theta = feasible_set.project(ball.center if start is None else np.asarray(start, dtype=np.float64))
    guard = config.divergence_factor * ball.radius
    batch = BatchSpec(size=config.batch_size, seed=config.seed, workers=config.workers)

    records: list[IterationRecord] = []
    for k in range(config.iterations):
        if float(np.linalg.norm(theta)) > guard:
            raise DivergedError(
                f"iterate norm exceeded {guard:.3e} at step {k}; lower the step size"
            )
        sample = minibatch_gradient(oracle, theta, batch, step=k)
        records.append(
            IterationRecord(k, theta, True, sample.gradient, CUT_SGD, sample.value, None)
        )
        alpha = config.step_size
        if config.schedule == SCHEDULE_INV_SQRT:
            alpha = config.step_size / np.sqrt(k + 1.0)
        theta = feasible_set.project(theta - alpha * sample.gradient)

    eval_size = config.eval_batch_size if config.eval_batch_size is not None else config.batch_size
    eval_batch = BatchSpec(size=eval_size, seed=config.seed, workers=config.workers)
    if config.report == "best":
        candidates = [(r.index, r.center, r.f_estimate) for r in records]
        candidates.append((len(records), theta, None))
    elif config.report == "last":
        candidates = [(len(records), theta, None)]
    else:
        visited = np.vstack([r.center for r in records] + [theta])
        candidates = [(len(records), visited.mean(axis=0), None)]
    _, point, estimate, eval_draws = _select_candidates(candidates, oracle, eval_batch)
    return SolverReport(
        best_point=point,
        best_estimate=estimate,
        iterations=len(records),
        batch_size=config.batch_size,
        eval_batch_size=eval_size,
        records=tuple(records),
        termination=TERMINATION_BUDGET,
        grad_draws=len(records) * config.batch_size,
        eval_draws=eval_draws,
    )
