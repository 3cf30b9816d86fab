import numpy as np
import pytest

from ellipsopt.cli import main
from ellipsopt.problems import load_dataset_csv


def _gen_args(tmp_path, m=200, n=3, **extra):
    args = ["gen-data", "--m", str(m), "--n", str(n), "--out-dir", str(tmp_path)]
    for key, value in extra.items():
        args.extend([f"--{key.replace('_', '-')}", str(value)])
    return args


class TestGenData:
    def test_writes_dataset_to_out_dir(self, tmp_path, capsys):
        assert main(_gen_args(tmp_path)) == 0
        dataset = load_dataset_csv(tmp_path / "data.csv")
        assert dataset.size == 200
        assert dataset.width == 3
        np.testing.assert_array_equal(dataset.features[:, -1], np.ones(200))
        assert "wrote 200 x 3 dataset" in capsys.readouterr().out

    def test_out_flag_overrides_the_default_path(self, tmp_path):
        out = tmp_path / "custom.csv"
        assert main(_gen_args(tmp_path, out=out)) == 0
        assert out.is_file()

    def test_no_intercept_drops_the_constant_column(self, tmp_path):
        assert main(_gen_args(tmp_path) + ["--no-intercept"]) == 0
        dataset = load_dataset_csv(tmp_path / "data.csv")
        assert not np.all(dataset.features[:, -1] == 1.0)

    def test_same_seed_reproduces_the_file(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert main(_gen_args(tmp_path, seed=7, out=a)) == 0
        assert main(_gen_args(tmp_path, seed=7, out=b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_sizes_exit_2(self, tmp_path, capsys):
        assert main(_gen_args(tmp_path, n=1)) == 2
        assert "error:" in capsys.readouterr().err


def _solve_args(tmp_path, **extra):
    args = [
        "solve", "--m", "300", "--n", "3", "--batch-size", "64",
        "--max-iters", "40", "--out-dir", str(tmp_path),
    ]
    for key, value in extra.items():
        args.extend([f"--{key.replace('_', '-')}", str(value)])
    return args


class TestSolve:
    def test_writes_trace_and_reports_the_run(self, tmp_path, capsys):
        assert main(_solve_args(tmp_path)) == 0
        out = capsys.readouterr().out
        assert "iterations=40" in out
        assert "batch_size=64" in out
        assert "termination=" in out
        assert "best_point=" in out
        trace = (tmp_path / "trace.csv").read_text(encoding="utf-8")
        assert trace.splitlines()[0] == "k,feasible,cut_kind,f_estimate,logdet_H,c0,c1,c2"
        assert len(trace.splitlines()) == 41

    def test_trace_flag_overrides_the_default_path(self, tmp_path):
        trace = tmp_path / "run.csv"
        assert main(_solve_args(tmp_path, trace=trace)) == 0
        assert trace.is_file()

    def test_reads_dataset_from_csv(self, tmp_path):
        assert main(_gen_args(tmp_path, m=250, n=4)) == 0
        args = [
            "solve", "--csv", str(tmp_path / "data.csv"), "--batch-size", "32",
            "--max-iters", "20", "--out-dir", str(tmp_path),
        ]
        assert main(args) == 0
        header = (tmp_path / "trace.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header.endswith("c0,c1,c2,c3")

    def test_malformed_csv_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("f0,f1\n1.0,2.0\n", encoding="utf-8")
        assert main(["solve", "--csv", str(bad), "--out-dir", str(tmp_path)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_csv_exits_2(self, tmp_path, capsys):
        missing = tmp_path / "nope.csv"
        assert main(["solve", "--csv", str(missing), "--out-dir", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "error:" in err
        assert "nope.csv" in err


def _bench_args(tmp_path, out="bench", **extra):
    args = [
        "bench", "--m", "400", "--n", "3", "--batch-size", "64",
        "--max-iters", "60", "--sgd-iterations", "60", "--sgd-batch-size", "8",
        "--sweep", "0.05,0.5", "--erm-tol", "1e-3",
        "--out-dir", str(tmp_path / out),
    ]
    for key, value in extra.items():
        args.extend([f"--{key.replace('_', '-')}", str(value)])
    return args


class TestBench:
    def test_single_solver_run_writes_artifacts_and_exits_0(self, tmp_path, capsys):
        assert main(_bench_args(tmp_path, solvers="ellipsoid")) == 0
        out_dir = tmp_path / "bench"
        assert (out_dir / "ellipsoid-seed0.csv").is_file()
        assert (out_dir / "summary.csv").is_file()
        assert (out_dir / "manifest.txt").is_file()
        out = capsys.readouterr().out
        assert "iters-to-thresholds" in out
        assert "ordering" not in out

    def test_failed_ordering_exits_1(self, tmp_path, capsys):
        # 3 iterations cannot reach the mid threshold, so the comparison fails
        assert main(_bench_args(tmp_path, max_iters=3, sgd_iterations=60)) == 1
        assert "FAILED" in capsys.readouterr().out

    def test_flags_win_over_the_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("m=300\nn=3\neps=0.25\nsolvers=ellipsoid\n", encoding="utf-8")
        args = _bench_args(tmp_path, config=cfg, m=400)
        assert main(args) == 0
        manifest = (tmp_path / "bench" / "manifest.txt").read_text(encoding="utf-8")
        assert "m=400" in manifest
        assert "eps=0.25" in manifest
        assert "solvers=ellipsoid" in manifest

    def test_seeds_flag_overrides_seed(self, tmp_path):
        args = _bench_args(tmp_path, solvers="ellipsoid", seed=9, seeds="0,1")
        assert main(args) == 0
        manifest = (tmp_path / "bench" / "manifest.txt").read_text(encoding="utf-8")
        assert "seeds=0,1" in manifest
        assert (tmp_path / "bench" / "ellipsoid-seed1.csv").is_file()

    def test_invalid_config_exits_2_without_artifacts(self, tmp_path, capsys):
        assert main(_bench_args(tmp_path, solvers="newton")) == 2
        assert "error:" in capsys.readouterr().err
        assert not (tmp_path / "bench").exists()

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("momentum=0.9\n", encoding="utf-8")
        assert main(_bench_args(tmp_path, config=cfg)) == 2
        assert "unknown config key" in capsys.readouterr().err


class TestValidate:
    def test_passing_suite_writes_report_and_exits_0(self, tmp_path, capsys):
        args = ["validate", "gradcheck", "--out-dir", str(tmp_path)]
        assert main(args) == 0
        report = (tmp_path / "validate-gradcheck.txt").read_text(encoding="utf-8")
        assert "suite=gradcheck" in report
        assert "passed=true" in report
        out = capsys.readouterr().out
        assert "passed=true" in out
        assert "report=" in out

    def test_seed_flag_reaches_the_suite(self, tmp_path):
        args = ["validate", "gradcheck", "--seed", "3", "--out-dir", str(tmp_path)]
        assert main(args) == 0

    def test_unknown_suite_is_a_usage_error(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["validate", "spin", "--out-dir", str(tmp_path)])
        assert exc.value.code == 2
        assert "invalid choice" in capsys.readouterr().err


def test_missing_subcommand_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    capsys.readouterr()
