import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vowelbench import gmm, rbf
from vowelbench.bench import harness
from vowelbench.bench.cli import main
from vowelbench.bench.config import BenchConfig, ConfigError, parse_config_text, parse_int_list, load_config
from vowelbench.bench.harness import GridSpec, RunResult
from vowelbench.errors import DataError


class TestRecognitionRate:
    def test_all_correct(self):
        assert harness.recognition_rate([1, 2, 3], [1, 2, 3]) == 100.0

    def test_266_of_333(self):
        pred = np.array([0] * 266 + [1] * 67)
        assert harness.recognition_rate(pred, np.zeros(333, dtype=int)) == 26600 / 333
        assert harness.recognition_rate(pred, np.zeros(333, dtype=int)) == pytest.approx(79.87987987987988)

    def test_errors(self):
        with pytest.raises(ValueError, match="length mismatch"):
            harness.recognition_rate([1, 2], [1])
        with pytest.raises(ValueError, match="empty"):
            harness.recognition_rate([], [])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=1, max_size=50),
           st.randoms(use_true_random=False))
    def test_identity_and_permutation(self, pairs, rnd):
        p = [a for a, _ in pairs]
        t = [b for _, b in pairs]
        assert harness.recognition_rate(t, t) == 100.0
        shuffled = pairs[:]
        rnd.shuffle(shuffled)
        assert harness.recognition_rate([a for a, _ in shuffled], [b for _, b in shuffled]) == \
            harness.recognition_rate(p, t)


def test_timed_noop():
    out, secs = harness.timed(lambda: 7)
    assert out == 7 and 0 <= secs < 1e-3


def test_seeds_from_master():
    assert harness.seeds_from_master(3, 3) == (3000, 3001, 3002)


class TestSweeps:
    def test_gmm_cardinality_and_order(self, separated):
        train, test = separated
        res = harness.sweep_gmm(train, test, range(1, 4), ["full", "diag"], (0, 1), {"n_restarts": 1})
        assert len(res) == 3 * 2 * 2
        assert [(r.param("kind"), r.param("k"), r.seed) for r in res] == \
            [(kd, k, s) for kd in ("diag", "full") for k in (1, 2, 3) for s in (0, 1)]
        assert all(r.test_rate == 100.0 for r in res)

    def test_rbf_cardinality(self, separated):
        train, test = separated
        res = harness.sweep_rbf(train, test, range(1, 6), (0,))
        assert [r.param("neurons") for r in res] == [1, 2, 3, 4, 5]

    def test_rbf_too_many_neurons(self, separated):
        train, test = separated
        with pytest.raises(DataError):
            harness.sweep_rbf(train, test, [len(train) + 1], (0,))

    def test_ofs_rows(self, separated, tmp_path):
        train, test = separated
        from vowelbench.ofs_rbf import OfsConfig
        run = harness.run_ofs(train, test, OfsConfig(max_neurons=4, n_spreads=2))
        assert len(run.class_rows()) == 10
        assert run.result.test_rate == 100.0
        harness.write_ofs(run, tmp_path / "o.csv")
        rows = list(csv.reader(open(tmp_path / "o.csv")))
        assert len(rows) == 12 and rows[-1][0] == "average"


def _rr(model, params, seed, tr, te):
    return RunResult(model, params, seed, tr, te, 0.1, 0.01)


class TestAggregation:
    def test_best_by_mean_test_then_train(self):
        res = [_rr("gmm", (("kind", "full"), ("k", 1)), 0, 80, 70),
               _rr("gmm", (("kind", "full"), ("k", 1)), 1, 80, 74),
               _rr("gmm", (("kind", "full"), ("k", 2)), 0, 81, 72),
               _rr("gmm", (("kind", "full"), ("k", 2)), 1, 83, 72),
               _rr("gmm", (("kind", "diag"), ("k", 5)), 0, 50, 72)]
        best = harness.best_configuration(res)
        assert best.param("k") == 2 and best.train_rate == 82 and best.test_rate == 72

    def test_mean_curve(self):
        res = [_rr("rbf", (("neurons", 2),), 0, 60, 50), _rr("rbf", (("neurons", 2),), 1, 70, 52),
               _rr("rbf", (("neurons", 1),), 0, 10, 20)]
        curve = harness.mean_curve(res)
        assert curve[0][:4] == (1, 1, 10.0, 20.0)
        assert curve[1][:4] == (2, 2, 65.0, 51.0)

    def test_compare_averages(self):
        best = {"gmm": _rr("gmm", (), 0, 79.6, 79.9), "rbf": _rr("rbf", (), 0, 78.1, 80.8),
                "ofs_rbf": _rr("ofs_rbf", (), 0, 79.6, 79.9)}
        rows = harness.compare_models(best)
        assert [r[0] for r in rows] == ["gmm", "rbf", "ofs_rbf"]
        assert rows[0][3] == pytest.approx(79.75)
        assert rows[1][3] == pytest.approx(79.45)
        assert rows[0][1:] == rows[2][1:]

    def test_compare_missing(self):
        with pytest.raises(DataError, match="missing"):
            harness.compare_models({"gmm": _rr("gmm", (), 0, 1, 1)})


class TestBoundary:
    def test_two_by_two(self, tmp_path, separated):
        train, _ = separated
        clf = gmm.fit_classifier(train, gmm.EmConfig(k=1))
        grid = GridSpec.from_counts((0, 1), (0, 1), 2, 2)
        P, labels, _ = harness.boundary_grid(clf, grid)
        assert P.tolist() == [[0, 0], [1, 0], [0, 1], [1, 1]]
        path = harness.export_boundary_grid(clf, grid, tmp_path / "b.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "x1,x2,label,score" and len(lines) == 5

    def test_constant_classifier(self):
        bias = np.zeros(10)
        bias[3] = 1.0
        net = rbf.RbfNetwork(np.zeros((1, 2)), 1.0, np.zeros((1, 10)), bias)
        _, labels, _ = harness.boundary_grid(net, GridSpec.from_counts((198, 1300), (550, 3369), 7, 9))
        assert len(labels) == 63 and set(labels.tolist()) == {3}

    def test_default_grid(self):
        P = harness.DEFAULT_GRID.points()
        assert len(P) == 40000
        assert P.min(axis=0).tolist() == [198, 550]
        np.testing.assert_allclose(P.max(axis=0), [1300, 3369])

    def test_unwritable(self, separated, tmp_path):
        train, _ = separated
        clf = gmm.fit_classifier(train, gmm.EmConfig(k=1))
        with pytest.raises(DataError):
            harness.export_boundary_grid(clf, harness.DEFAULT_GRID, tmp_path / "no" / "such" / "b.csv")


def test_strip_timing(tmp_path):
    res = [_rr("rbf", (("neurons", 1),), 0, 10, 20)]
    harness.write_results(res, tmp_path / "r.csv")
    assert harness.strip_timing(tmp_path / "r.csv") == "model,neurons,seed,train_rate,test_rate\nrbf,1,0,10.00,20.00\n"


class TestConfig:
    def test_int_lists(self):
        assert parse_int_list("1..4") == (1, 2, 3, 4)
        assert parse_int_list("2, 5, 7..8") == (2, 5, 7, 8)
        with pytest.raises(ConfigError):
            parse_int_list("3..1")
        with pytest.raises(ConfigError):
            parse_int_list("a")

    def test_sections_and_comments(self):
        text = "# top\n[gmm]\ncenters = 1..3  # few\nkinds = full\nrun.seed = 4\n"
        cfg = BenchConfig().with_settings(parse_config_text(text))
        assert cfg.gmm_centers == (1, 2, 3) and cfg.gmm_kinds == ("full",) and cfg.seed == 4
        assert cfg.seeds == (4000,)

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown configuration key"):
            BenchConfig().with_settings({"gmm.colour": "red"})

    def test_bad_values(self):
        with pytest.raises(ConfigError):
            BenchConfig().with_settings({"gmm.kinds": "spherical"})
        with pytest.raises(ConfigError):
            BenchConfig().with_settings({"run.repeats": "0"})
        with pytest.raises(ConfigError):
            parse_config_text("just words")

    def test_load_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "none.cfg")


class TestCli:
    def test_no_command_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["stats", "--bogus"])
        assert exc.value.code == 1

    def test_config_error_exit(self, tmp_path):
        assert main(["stats", "--out", str(tmp_path), "--set", "gmm.nope=1"]) == 1
        assert main(["stats", "--out", str(tmp_path), "--train", "x.csv"]) == 1

    def test_data_error_exit(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2,99\n")
        assert main(["stats", "--train", str(bad), "--test", str(bad), "--out", str(tmp_path)]) == 2

    def test_numerical_error_exit(self, tmp_path):
        # every class collapsed onto one point with a vanishing floor: singular covariances
        rows = "".join(f"{c}.0,{c}.0,{c}\n" * 3 for c in range(10))
        p = tmp_path / "flat.csv"
        p.write_text(rows)
        code = main(["sweep-gmm", "--train", str(p), "--test", str(p), "--out", str(tmp_path),
                     "--set", "gmm.centers=1", "--set", "gmm.kinds=full", "--set", "gmm.floor=1e-320"])
        assert code == 3

    def test_synth_then_stats(self, tmp_path, capsys):
        assert main(["synth", "--out", str(tmp_path)]) == 0
        assert main(["stats", "--train", str(tmp_path / "train.csv"), "--test", str(tmp_path / "test.csv"),
                     "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "stats_training.csv").read_text().splitlines()
        assert lines[1] == "Average,567.82,1533.18"

    def test_boundary_with_model_file(self, tmp_path):
        out = tmp_path / "o"
        assert main(["boundary", "--model", "rbf", "--out", str(out), "--set", "grid.points=5",
                     "--save-model", str(tmp_path / "m.txt")]) == 0
        assert len((out / "boundary_rbf.csv").read_text().splitlines()) == 26
        assert (tmp_path / "m.txt").read_text().startswith("kind = rbf\n")
