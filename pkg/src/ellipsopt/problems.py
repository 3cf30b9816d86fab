"""Problem instances: logistic regression on data, plus synthetic test objectives.

The logistic objective is the mean binary cross-entropy
mean_i [ log(1 + exp(z_i)) - y_i z_i ] with z_i = <w, x_i>, evaluated in the
softplus form that stays finite for large |z|. Its per-sample gradient is
(sigmoid(z_i) - y_i) x_i.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import expit

from . import _rng
from .geometry import Ball, FeasibleSet, Vector, _as_vector
from .oracles import GaussianOracle, GradSample, StochasticGradOracle
from .solver import SolverConfig, estimate_value_range, solve

_LABEL_COLUMN = "y"
_SYNTH_WEIGHT_NORM = 2.0
_LABEL_REDRAWS = 8

DEFAULT_WEIGHT_RADIUS = 10.0


class DatasetFormatError(ValueError):
    """Raised for malformed dataset files, with the offending line number."""


@dataclass(frozen=True)
class Dataset:
    """Design matrix (m, n) and binary labels (m,) in {0, 1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("features must be a non-empty 2-D array")
        if y.shape != (X.shape[0],):
            raise ValueError("labels must be one value per row of features")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def logistic_value_grad(weights, features_row, label: float) -> tuple[float, Vector]:
    """Single-sample cross-entropy loss and gradient (sigmoid(z) - y) x."""
    w = _as_vector(weights)
    x = _as_vector(features_row, w.shape[0])
    if label not in (0, 1):
        raise ValueError("label must be 0 or 1")
    z = float(w @ x)
    value = float(_softplus(np.asarray(z)) - label * z)
    grad = (float(expit(z)) - label) * x
    return value, grad


class LogisticOracle(StochasticGradOracle):
    """One draw = the loss/gradient of a uniformly sampled dataset row.

    With ``enumerate_indices=True`` the oracle walks the rows cyclically
    instead of sampling, so a batch of size m averages every row exactly
    once and reproduces the full-data gradient.
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray, *, enumerate_indices: bool = False) -> None:
        self._X = np.asarray(features, dtype=np.float64)
        self._y = np.asarray(labels, dtype=np.float64)
        self.enumerate_indices = enumerate_indices
        if self._X.shape[1] < 2:
            raise ValueError("oracle dimension must be >= 2")

    def _rows(self, seed: int, step: int, stream: int, start: int, count: int):
        if self.enumerate_indices:
            idx = (start + np.arange(count)) % self._X.shape[0]
        else:
            key = _rng.stream_key(seed, stream, step)
            idx = _rng.uniform_indices(key, start, count, self._X.shape[0])
        return self._X[idx], self._y[idx]

    @property
    def dimension(self) -> int:
        return self._X.shape[1]

    def draw_block(self, x, seed, step, start, count):
        Xb, yb = self._rows(seed, step, _rng.GRAD_STREAM, start, count)
        z = Xb @ x
        values = _softplus(z) - yb * z
        grads = (expit(z) - yb)[:, None] * Xb
        return grads, values

    def value_block_crn(self, points, seed, step, start, count):
        Xb, yb = self._rows(seed, step, _rng.EVAL_STREAM, start, count)
        z = Xb @ points.T
        return _softplus(z) - yb[:, None] * z


class LogisticProblem:
    """Logistic regression over a ball-constrained weight space.

    The feasible set is the euclidean ball of radius ``weight_radius`` around
    the origin, so R = rho = weight_radius and D = 2 * weight_radius.
    """

    def __init__(self, dataset: Dataset, weight_radius: float = DEFAULT_WEIGHT_RADIUS) -> None:
        self.dataset = dataset
        if dataset.width < 2:
            raise ValueError("logistic problems need at least 2 feature columns")
        self.feasible_set: FeasibleSet = Ball(np.zeros(dataset.width), weight_radius)

    @property
    def dimension(self) -> int:
        return self.dataset.width

    def objective(self, weights) -> float:
        return float(self.objective_many(np.asarray(weights, dtype=np.float64)[None, :])[0])

    def objective_many(self, weight_rows: np.ndarray) -> np.ndarray:
        """Full-data mean loss at each row of (k, n) weights."""
        Z = self.dataset.features @ np.asarray(weight_rows, dtype=np.float64).T
        losses = _softplus(Z) - self.dataset.labels[:, None] * Z
        return losses.mean(axis=0)

    def gradient(self, weights) -> Vector:
        w = _as_vector(weights, self.dimension)
        z = self.dataset.features @ w
        residual = expit(z) - self.dataset.labels
        return self.dataset.features.T @ residual / self.dataset.size

    def objective_and_gradient(self, weights) -> tuple[float, Vector]:
        w = _as_vector(weights, self.dimension)
        z = self.dataset.features @ w
        value = float(np.mean(_softplus(z) - self.dataset.labels * z))
        residual = expit(z) - self.dataset.labels
        return value, self.dataset.features.T @ residual / self.dataset.size

    def oracle(self) -> LogisticOracle:
        return LogisticOracle(self.dataset.features, self.dataset.labels)

    def exact_oracle(self) -> GaussianOracle:
        """Noiseless full-data oracle (for references and baselines)."""
        return GaussianOracle(self.objective_and_gradient, self.dimension, sigma=0.0)

    @cached_property
    def fitted_sigma(self) -> float:
        return fit_subgaussian_sigma(self.dataset)


def sample_oracle(problem: LogisticProblem, weights, seed: int = 0, step: int = 0) -> GradSample:
    """One stochastic draw: loss and gradient at a uniformly sampled row."""
    grads, values = problem.oracle().draw_block(
        _as_vector(weights, problem.dimension), seed, step, 0, 1
    )
    return GradSample(gradient=grads[0], value=float(values[0]))


def fit_subgaussian_sigma(dataset: Dataset, quantile: float = 0.99, safety: float = 1.5) -> float:
    """Subgaussian scale of per-sample gradient deviations at w = 0.

    Takes the given quantile of ||g_i - mean g|| over the data and inflates
    it by ``safety``; per-sample deviations are bounded by 2 max ||x_i||, so
    the inflated quantile comfortably satisfies E exp(||.||^2/sigma^2) <= e
    on non-degenerate data.
    """
    grads = (0.5 - dataset.labels)[:, None] * dataset.features
    deviations = np.linalg.norm(grads - grads.mean(axis=0), axis=1)
    scale = float(np.quantile(deviations, quantile)) * safety
    if scale <= 0.0:
        raise ValueError("degenerate dataset: all per-sample gradients coincide")
    return scale


@dataclass(frozen=True)
class QuadraticProblem:
    """f(x) = ||x - target||^2 over a feasible set; optimum known exactly."""

    target: Vector
    feasible_set: FeasibleSet

    def objective(self, x) -> float:
        d = _as_vector(x, self.feasible_set.dimension) - self.target
        return float(d @ d)

    def gradient(self, x) -> Vector:
        return 2.0 * (_as_vector(x, self.feasible_set.dimension) - self.target)

    def objective_and_gradient(self, x) -> tuple[float, Vector]:
        d = _as_vector(x, self.feasible_set.dimension) - self.target
        return float(d @ d), 2.0 * d

    def objective_rows(self, rows: np.ndarray) -> np.ndarray:
        d = np.asarray(rows, dtype=np.float64) - self.target
        return np.einsum("ij,ij->i", d, d)

    def reference(self) -> tuple[Vector, float]:
        best = self.feasible_set.project(self.target)
        return best, self.objective(best)


@dataclass(frozen=True)
class LinearProblem:
    """f(x) = <slope, x> over a feasible set; minimized at a support point."""

    slope: Vector
    feasible_set: FeasibleSet

    def objective(self, x) -> float:
        return float(self.slope @ _as_vector(x, self.feasible_set.dimension))

    def gradient(self, x) -> Vector:
        return np.array(self.slope, dtype=np.float64)

    def objective_and_gradient(self, x) -> tuple[float, Vector]:
        return self.objective(x), self.gradient(x)

    def objective_rows(self, rows: np.ndarray) -> np.ndarray:
        return np.asarray(rows, dtype=np.float64) @ self.slope

    def reference(self) -> tuple[Vector, float]:
        best = self.feasible_set.support_point(-np.asarray(self.slope, dtype=np.float64))
        return best, self.objective(best)


def generate_synthetic(m: int, n: int, seed: int = 0, intercept: bool = True) -> tuple[Dataset, Vector]:
    """Draw a synthetic logistic dataset and its ground-truth weights.

    Features are standard Gaussian, with the last column constant 1 when
    ``intercept`` is set (``n`` counts that column). True weights sit on the
    sphere of radius 2; labels are Bernoulli(sigmoid(<w*, x>)). Asserts the
    labels are non-constant for m >= 100 (redraws a few times, then fails).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), _rng.DATA_STREAM)))
    gaussian_cols = n - 1 if intercept else n
    X = rng.standard_normal((m, gaussian_cols))
    if intercept:
        X = np.hstack([X, np.ones((m, 1))])
    direction = rng.standard_normal(n)
    true_weights = direction * (_SYNTH_WEIGHT_NORM / float(np.linalg.norm(direction)))
    probs = expit(X @ true_weights)
    labels = None
    for _ in range(_LABEL_REDRAWS):
        draw = (rng.random(m) < probs).astype(np.float64)
        labels = draw
        if 0.0 < draw.mean() < 1.0:
            break
    assert labels is not None
    if m >= 100 and not 0.0 < labels.mean() < 1.0:
        raise RuntimeError("synthetic labels came out constant; dataset rejected")
    return Dataset(features=X, labels=labels), true_weights


def split_train_test(dataset: Dataset, test_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle split; returns (train, test)."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test fraction must lie strictly inside (0, 1)")
    if dataset.size < 2:
        raise ValueError("need at least 2 rows to split")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), _rng.SPLIT_STREAM)))
    perm = rng.permutation(dataset.size)
    n_test = min(dataset.size - 1, max(1, int(round(dataset.size * test_fraction))))
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return (
        Dataset(dataset.features[train_idx], dataset.labels[train_idx]),
        Dataset(dataset.features[test_idx], dataset.labels[test_idx]),
    )


def erm_reference(problem, tol: float = 1e-6, *, seed: int = 0) -> tuple[Vector, float]:
    """Reference optimum from a zero-noise run of the cut solver.

    ``problem`` needs objective_and_gradient, objective and feasible_set.
    The run is budgeted so the worst-case gap bound clears ``tol`` and stops
    earlier as soon as the exact-gradient certificate does.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    oracle = GaussianOracle(problem.objective_and_gradient, problem.feasible_set.dimension, sigma=0.0)
    value_range = estimate_value_range(oracle, problem.feasible_set, seed=seed)
    config = SolverConfig(
        eps=tol,
        sigma=0.0,
        seed=seed,
        batch_size=1,
        value_range=max(value_range, tol),
        certificate_stop=tol,
    )
    report = solve(oracle, problem.feasible_set, config)
    best = report.best_point
    return best, float(problem.objective(best))


def save_dataset_csv(dataset: Dataset, path) -> None:
    """Write features then a final label column named 'y', full precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(dataset.width)] + [_LABEL_COLUMN])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [str(int(label))])


def load_dataset_csv(path) -> Dataset:
    """Read a dataset CSV (header row; label column named 'y', any position)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}:1: empty file") from None
        header = [h.strip() for h in header]
        if header.count(_LABEL_COLUMN) != 1:
            raise DatasetFormatError(f"{path}:1: header must contain exactly one '{_LABEL_COLUMN}' column")
        label_pos = header.index(_LABEL_COLUMN)
        feature_pos = [i for i in range(len(header)) if i != label_pos]
        features, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetFormatError(
                    f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                values = [float(row[i]) for i in feature_pos]
                label = float(row[label_pos])
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{line_no}: {exc}") from None
            if label not in (0.0, 1.0):
                raise DatasetFormatError(f"{path}:{line_no}: label must be 0 or 1, got {row[label_pos]!r}")
            features.append(values)
            labels.append(label)
    if not features:
        raise DatasetFormatError(f"{path}: no data rows")
    try:
        return Dataset(np.asarray(features), np.asarray(labels))
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: {exc}") from None
