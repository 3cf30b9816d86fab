"""Cut-based solver for stochastic convex problems in low dimensions.

The run starts from the feasible set's bounding ball and repeatedly halves an
ellipsoid: at a feasible center it cuts along a minibatch gradient estimate,
at an infeasible center along a separation hyperplane. After the budget is
spent, every feasible center (including the one produced by the final update)
competes in a fresh shared-noise evaluation, and the best one is returned.

For a target accuracy eps on a set with diameter D, inner radius rho and
objective range B, ceil(2 n^2 ln(D B / (rho eps))) iterations suffice, with
the batch size chosen so each gradient estimate is an (eps/2)-subgradient
with per-call failure probability beta / (2 N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .geometry import (
    DegenerateEllipsoidError,
    Ellipsoid,
    FeasibleSet,
    Vector,
    linear_optimality_gap,
    ellipsoid_step,
)
from .oracles import (
    BatchSpec,
    StochasticGradOracle,
    estimate_values,
    minibatch_gradient,
    required_batch_size,
)
from .reporting import (
    CUT_SEPARATION,
    CUT_SUBGRADIENT,
    CUT_ZERO_GRAD,
    TERMINATION_BUDGET,
    TERMINATION_CERTIFIED,
    TERMINATION_DEGENERATE,
    TERMINATION_ZERO_GRAD,
    IterationRecord,
    SolverReport,
)

# reserved steps on the shared-noise evaluation stream
_SELECTION_STEP = 0
_RANGE_PROBE_STEP = 1


class NoFeasiblePointError(RuntimeError):
    """Raised when a run never visits a feasible center."""


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters; geometry fields default to the feasible set's values.

    ``value_range`` (the objective's max-min spread B) is estimated by
    sampling when not supplied. ``certificate_stop`` enables an early stop for
    noiseless oracles once the exact-gradient gap bound certifies the target;
    it must stay None for noisy runs.
    """

    eps: float = 0.05
    beta: float = 0.1
    sigma: float = 0.0
    seed: int = 0
    workers: int = 1
    batch_size: int | None = None
    eval_batch_size: int | None = None
    max_iterations: int | None = None
    value_range: float | None = None
    diameter: float | None = None
    inner_radius: float | None = None
    radius: float | None = None
    zero_grad_rtol: float = 1e-12
    certificate_stop: float | None = None

    def __post_init__(self) -> None:
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie strictly inside (0, 1)")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.workers < 1:
            raise ValueError("worker count must be at least 1")
        for name in ("batch_size", "eval_batch_size", "max_iterations"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be at least 1 when given")
        for name in ("value_range", "diameter", "inner_radius", "radius"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive when given")


def iteration_budget(dim: int, diameter: float, value_range: float, inner_radius: float, eps: float) -> int:
    """ceil(2 n^2 ln(D B / (rho eps))), the cut budget that guarantees eps."""
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    if diameter <= 0 or inner_radius <= 0:
        raise ValueError("diameter and inner radius must be positive")
    if value_range < 0:
        raise ValueError("value range must be non-negative")
    if eps <= 0:
        raise ValueError("eps must be positive")
    ratio = diameter * value_range / (inner_radius * eps)
    if ratio <= 1.0:
        return 0
    return math.ceil(2.0 * dim * dim * math.log(ratio))


def theoretical_gap(
    dim: int, iterations: int, value_range: float, radius: float, inner_radius: float, delta: float = 0.0
) -> float:
    """Worst-case gap of the returned point after N cut steps.

    Equals (B R / rho) exp(-N / (2 n^2)) + delta; valid once the budget
    clears 2 n^2 ln(R / rho), with delta the per-call subgradient slack.
    """
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    if value_range < 0 or radius <= 0 or inner_radius <= 0 or delta < 0:
        raise ValueError("geometry constants out of range")
    return value_range * radius / inner_radius * math.exp(-iterations / (2.0 * dim * dim)) + delta


def estimate_value_range(
    oracle: StochasticGradOracle,
    feasible_set: FeasibleSet,
    *,
    seed: int = 0,
    sample_count: int = 100,
    batch_size: int = 64,
    workers: int = 1,
    safety: float = 2.0,
) -> float:
    """Estimate the objective spread B by probing random feasible points."""
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), _rng.PROBE_STREAM)))
    points = feasible_set.sample(sample_count, rng)
    batch = BatchSpec(size=1 if oracle.is_deterministic else batch_size, seed=seed, workers=workers)
    values = estimate_values(oracle, points, batch, step=_RANGE_PROBE_STEP)
    return safety * float(values.max() - values.min())


def _select_candidates(
    candidates: list[tuple[int, Vector, float | None]],
    oracle: StochasticGradOracle,
    eval_batch: BatchSpec,
) -> tuple[int, Vector, float, int]:
    """Pick the candidate with the lowest estimated objective.

    Deterministic oracles reuse recorded estimates (they are exact); noisy
    ones get one fresh common-random-numbers batch so all candidates are
    compared under identical draws. Ties go to the lowest iteration index.
    Returns (index, point, value, draws spent evaluating).
    """
    if not candidates:
        raise NoFeasiblePointError("no feasible center was visited")
    if oracle.is_deterministic:
        known = [c for c in candidates if c[2] is not None]
        missing = [c for c in candidates if c[2] is None]
        if missing:
            points = np.vstack([c[1] for c in missing])
            filled = estimate_values(oracle, points, BatchSpec(1, eval_batch.seed, eval_batch.workers), step=_SELECTION_STEP)
            known += [(idx, pt, float(v)) for (idx, pt, _), v in zip(missing, filled)]
        known.sort(key=lambda c: (c[2], c[0]))
        idx, point, value = known[0]
        return idx, point, float(value), len(missing)
    points = np.vstack([c[1] for c in candidates])
    values = estimate_values(oracle, points, eval_batch, step=_SELECTION_STEP)
    order = int(np.lexsort((np.array([c[0] for c in candidates]), values))[0])
    draws = len(candidates) * eval_batch.size
    return candidates[order][0], candidates[order][1], float(values[order]), draws


def best_point_selection(
    records, oracle: StochasticGradOracle, eval_batch: BatchSpec
) -> tuple[int, Vector, float]:
    """Re-evaluate every feasible recorded center and return the winner.

    Returns (iteration index, center, estimated value). Raises
    NoFeasiblePointError when the trace holds no feasible record.
    """
    candidates = [(r.index, r.center, r.f_estimate) for r in records if r.feasible]
    idx, point, value, _ = _select_candidates(candidates, oracle, eval_batch)
    return idx, point, value


def solve(oracle: StochasticGradOracle, feasible_set: FeasibleSet, config: SolverConfig) -> SolverReport:
    """Run the cut loop and return the best feasible center found.

    Iterations, batch size and the zero-gradient tolerance resolve from the
    config and the set's geometry; see SolverConfig. The trace records every
    iteration's center, branch, estimate and log det of the ellipsoid shape.
    """
    n = feasible_set.dimension
    if oracle.dimension != n:
        raise ValueError(
            f"oracle dimension {oracle.dimension} does not match the set's {n}"
        )
    ball = feasible_set.bounding_ball
    radius = config.radius if config.radius is not None else ball.radius
    diameter = config.diameter if config.diameter is not None else feasible_set.diameter
    inner_radius = config.inner_radius if config.inner_radius is not None else feasible_set.inner_radius
    value_range = config.value_range
    if value_range is None:
        value_range = estimate_value_range(
            oracle, feasible_set, seed=config.seed, workers=config.workers
        )
    budget = config.max_iterations
    if budget is None:
        budget = iteration_budget(n, diameter, value_range, inner_radius, config.eps)
    batch_size = config.batch_size
    if batch_size is None:
        if config.sigma == 0.0:
            batch_size = 1
        else:
            per_call_beta = config.beta / (2.0 * max(budget, 1))
            batch_size = required_batch_size(config.sigma, diameter, config.eps, per_call_beta)
    eval_batch_size = config.eval_batch_size if config.eval_batch_size is not None else batch_size
    zero_tol = config.zero_grad_rtol * value_range / diameter
    if config.certificate_stop is not None and not oracle.is_deterministic:
        raise ValueError("certificate_stop requires a deterministic oracle")

    batch = BatchSpec(size=batch_size, seed=config.seed, workers=config.workers)
    eval_batch = BatchSpec(size=eval_batch_size, seed=config.seed, workers=config.workers)
    ellipsoid = Ellipsoid(ball.center, radius * radius * np.eye(n))

    records: list[IterationRecord] = []
    termination = TERMINATION_BUDGET
    zero_grad_exit: tuple[Vector, float] | None = None
    grad_draws = 0

    for k in range(budget):
        center = ellipsoid.center
        feasible = feasible_set.contains(center)
        log_det = ellipsoid.log_det_shape()
        if feasible:
            sample = minibatch_gradient(oracle, center, batch, step=k)
            grad_draws += batch_size
            cut = sample.gradient
            estimate = sample.value
            if float(np.linalg.norm(cut)) <= zero_tol:
                records.append(
                    IterationRecord(k, center, True, cut, CUT_ZERO_GRAD, estimate, log_det)
                )
                zero_grad_exit = (center, estimate)
                termination = TERMINATION_ZERO_GRAD
                break
            kind = CUT_SUBGRADIENT
        else:
            cut = feasible_set.separation_hyperplane(center)
            estimate = None
            kind = CUT_SEPARATION
        records.append(IterationRecord(k, center, feasible, cut, kind, estimate, log_det))
        if (
            config.certificate_stop is not None
            and feasible
            and linear_optimality_gap(feasible_set, center, cut) <= config.certificate_stop
        ):
            termination = TERMINATION_CERTIFIED
            break
        try:
            ellipsoid = ellipsoid_step(ellipsoid, cut)
        except DegenerateEllipsoidError:
            termination = TERMINATION_DEGENERATE
            break

    if zero_grad_exit is not None:
        point, estimate = zero_grad_exit
        return SolverReport(
            best_point=point,
            best_estimate=estimate,
            iterations=len(records),
            batch_size=batch_size,
            eval_batch_size=eval_batch_size,
            records=tuple(records),
            termination=termination,
            grad_draws=grad_draws,
        )

    candidates = [(r.index, r.center, r.f_estimate) for r in records if r.feasible]
    final_center = ellipsoid.center
    if feasible_set.contains(final_center):
        # the last update's center competes too, even without an oracle call
        candidates.append((len(records), final_center, None))
    _, point, estimate, eval_draws = _select_candidates(candidates, oracle, eval_batch)
    return SolverReport(
        best_point=point,
        best_estimate=estimate,
        iterations=len(records),
        batch_size=batch_size,
        eval_batch_size=eval_batch_size,
        records=tuple(records),
        termination=termination,
        grad_draws=grad_draws,
        eval_draws=eval_draws,
    )
