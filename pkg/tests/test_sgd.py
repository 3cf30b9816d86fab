import numpy as np
import pytest

from ellipsopt.geometry import Ball
from ellipsopt.oracles import GaussianOracle
from ellipsopt.problems import QuadraticProblem
from ellipsopt.sgd import DivergedError, SgdConfig, default_step_grid, sgd_run


def exact_oracle(problem, dim):
    return GaussianOracle(problem.objective_and_gradient, dim, sigma=0.0)


def test_single_step_matches_hand_computation():
    # theta1 = project(theta0 - alpha * grad), grad of ||x||^2 at (1,1) is (2,2)
    ball = Ball(np.zeros(2), 10.0)
    problem = QuadraticProblem(np.zeros(2), ball)
    oracle = exact_oracle(problem, 2)
    config = SgdConfig(step_size=0.4, iterations=1, batch_size=1, seed=0, report="last")
    report = sgd_run(oracle, ball, config, start=np.array([1.0, 1.0]))
    assert np.allclose(report.best_point, [0.2, 0.2], atol=1e-12)


def test_projection_keeps_iterates_feasible():
    ball = Ball(np.zeros(2), 0.5)
    problem = QuadraticProblem(np.array([5.0, 0.0]), ball)  # pulls outward
    oracle = exact_oracle(problem, 2)
    config = SgdConfig(step_size=0.3, iterations=50, batch_size=1, seed=0, report="last")
    report = sgd_run(oracle, ball, config)
    for rec in report.records:
        assert np.linalg.norm(rec.center) <= 0.5 * (1 + 1e-9)
    assert np.allclose(report.best_point, [0.5, 0.0], atol=1e-6)


def test_divergence_guard_raises():
    ball = Ball(np.zeros(2), 1.0)

    def runaway(x):
        return 0.0, np.asarray(x) * -1e6  # pushes hard away from the origin

    class NoProject(Ball):
        def project(self, x):  # leave iterates unprojected to let them blow up
            return np.asarray(x, dtype=np.float64)

    s = NoProject(np.zeros(2), 1.0)
    oracle = GaussianOracle(runaway, 2, sigma=0.0)
    with pytest.raises(DivergedError):
        sgd_run(oracle, s, SgdConfig(step_size=1.0, iterations=50, batch_size=1, seed=0),
                start=np.array([0.1, 0.0]))


def test_inv_sqrt_schedule_shrinks_steps():
    ball = Ball(np.zeros(2), 1.0)
    problem = QuadraticProblem(np.array([0.6, 0.0]), ball)
    oracle = exact_oracle(problem, 2)
    const = sgd_run(oracle, ball, SgdConfig(step_size=0.4, iterations=30, batch_size=1,
                                            seed=0, schedule="constant", report="last"))
    decay = sgd_run(oracle, ball, SgdConfig(step_size=0.4, iterations=30, batch_size=1,
                                            seed=0, schedule="inv-sqrt", report="last"))
    # first move identical, later moves strictly smaller under the decay
    d_const = np.linalg.norm(const.records[1].center - const.records[0].center)
    d_decay = np.linalg.norm(decay.records[1].center - decay.records[0].center)
    assert d_const == pytest.approx(d_decay, rel=1e-12)
    tail_const = np.linalg.norm(const.records[-1].center - const.records[-2].center)
    tail_decay = np.linalg.norm(decay.records[-1].center - decay.records[-2].center)
    assert tail_decay < tail_const or tail_const == 0.0


def test_report_modes_differ_and_are_deterministic():
    ball = Ball(np.zeros(2), 1.0)
    problem = QuadraticProblem(np.array([0.4, 0.3]), ball)
    oracle = GaussianOracle(problem.objective_and_gradient, 2, sigma=0.3)
    runs = {}
    for mode in ("best", "last", "average"):
        a = sgd_run(oracle, ball, SgdConfig(step_size=0.1, iterations=40, batch_size=8,
                                            seed=5, report=mode))
        b = sgd_run(oracle, ball, SgdConfig(step_size=0.1, iterations=40, batch_size=8,
                                            seed=5, report=mode))
        assert np.array_equal(a.best_point, b.best_point)
        runs[mode] = a
    assert runs["best"].best_estimate <= runs["last"].best_estimate + 1e-9


def test_worker_count_does_not_change_the_run():
    ball = Ball(np.zeros(3), 1.0)
    problem = QuadraticProblem(np.array([0.2, -0.1, 0.4]), ball)
    oracle = GaussianOracle(problem.objective_and_gradient, 3, sigma=0.5)
    one = sgd_run(oracle, ball, SgdConfig(step_size=0.05, iterations=25, batch_size=64,
                                          seed=2, workers=1, report="last"))
    four = sgd_run(oracle, ball, SgdConfig(step_size=0.05, iterations=25, batch_size=64,
                                           seed=2, workers=4, report="last"))
    assert np.array_equal(one.best_point, four.best_point)
    for ra, rb in zip(one.records, four.records):
        assert np.array_equal(ra.center, rb.center)
        assert ra.f_estimate == rb.f_estimate


def test_default_step_grid_values():
    grid = default_step_grid(2.0, 4.0)
    assert grid == pytest.approx((0.0005, 0.005, 0.05, 0.25, 0.5))
    with pytest.raises(ValueError):
        default_step_grid(0.0, 1.0)


def test_sgd_config_validation():
    with pytest.raises(ValueError):
        SgdConfig(step_size=-0.1, iterations=10)
    with pytest.raises(ValueError):
        SgdConfig(step_size=0.1, iterations=0)
    with pytest.raises(ValueError):
        SgdConfig(step_size=0.1, iterations=10, schedule="linear")
    with pytest.raises(ValueError):
        SgdConfig(step_size=0.1, iterations=10, report="median")
