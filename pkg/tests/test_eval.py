import math
import os

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.ndimage import median_filter

from pairsgd.data import Dataset, kfold_indices
from pairsgd.eval import (BENCHMARK_HEADER, GRID, BenchmarkReport, Trainer, UndefinedAUC,
                          atomic_write, auc_brute, auc_score, benchmark, convergence_experiment,
                          cross_validate, csv_text, default_grid, geometric_checkpoints,
                          log_slope, running_average, write_csv)
from pairsgd.losses import HingeAUC
from pairsgd.optimizer import Constant
from pairsgd.synthetic import gaussian_classes


def test_auc_examples():
    assert auc_score([0.9, 0.1], [1, -1]) == 1.0
    assert auc_score([0.1, 0.9], [1, -1]) == 0.0
    assert auc_score([3.0] * 6, [1, -1, 1, -1, 1, 1]) == 0.5
    assert auc_score([1, 2, 2, 3], [-1, 1, -1, 1]) == pytest.approx(0.875)


@pytest.mark.parametrize("labels", [[1, 1, 1], [-1, -1], []])
def test_auc_single_class(labels):
    with pytest.raises(UndefinedAUC):
        auc_score(np.zeros(len(labels)), labels)


def test_auc_rejects_bad_labels():
    with pytest.raises(ValueError):
        auc_score([0.1, 0.2], [1, 0])


def test_auc_matches_brute_force_1000():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 51))
        y = rng.choice([-1, 1], n)
        y[:2] = (1, -1)
        s = np.round(rng.normal(size=n), int(rng.integers(0, 3)))     # plenty of ties
        assert abs(auc_score(s, y) - auc_brute(s, y)) <= 1e-12


@given(st.lists(st.integers(-40, 40), min_size=2, max_size=40), st.integers(0, 1000))
def test_auc_monotone_invariance(scores, seed):
    s = np.array(scores) / 8.0          # coarse grid keeps the transforms strictly monotone in floats
    y = np.random.default_rng(seed).choice([-1, 1], len(s))
    y[:2] = (1, -1)
    a = auc_score(s, y)
    assert auc_score(np.exp(s), y) == a
    assert auc_score(3 * s + 1, y) == a
    assert auc_score(-s, y) == pytest.approx(1 - a, abs=1e-15)


def test_cv_single_point_grid(small_ds):
    r = cross_validate(small_ds, lambda ds, p, s: np.ones(ds.d), [{"eta": 0.1, "D": 1.0}], k=3)
    assert r.best == {"eta": 0.1, "D": 1.0} and len(r.table) == 1


def test_cv_tie_break_smaller_eta_then_D(small_ds):
    fit = lambda ds, p, s: np.ones(ds.d)      # every point scores the same
    grid = [{"eta": 1.0, "D": 0.1}, {"eta": 0.1, "D": 10.0}, {"eta": 0.1, "D": 1.0}]
    assert cross_validate(small_ds, fit, grid, k=3).best == {"eta": 0.1, "D": 1.0}
    grid = [{"eta": None, "D": 10.0}, {"eta": None, "D": 1.0}]
    assert cross_validate(small_ds, fit, grid, k=3).best["D"] == 1.0


def test_cv_skips_single_class_fold():
    X = np.random.default_rng(0).normal(size=(12, 2))
    y = np.array([1, 1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1])
    ds = Dataset(X, y)
    assert any(len(set(y[f])) == 1 for f in kfold_indices(12, 4, 0))
    with pytest.warns(UserWarning, match="single class"):
        r = cross_validate(ds, lambda d, p, s: np.ones(2), [{"eta": 1.0, "D": 1.0}], k=4, seed=0)
    assert math.isfinite(r.score)


def test_cv_all_folds_single_class():
    ds = Dataset(np.ones((6, 2)), [1] * 6)
    with pytest.raises(UndefinedAUC):
        with pytest.warns(UserWarning):
            cross_validate(ds, lambda d, p, s: np.ones(2), [{"eta": 1.0, "D": 1.0}], k=3)


def test_cv_empty_grid(small_ds):
    with pytest.raises(ValueError):
        cross_validate(small_ds, lambda d, p, s: np.ones(d.d), [])


def test_default_grid():
    assert len(default_grid("sgd")) == 49 and GRID[0] == 1e-3 and GRID[-1] == 1e3
    g = default_grid("dp-smooth")
    assert len(g) == 7 and all(p["eta"] is None for p in g)


def test_benchmark_single_repeat_std_zero():
    ds = gaussian_classes(80, 3, seed=0)
    rep = benchmark(ds, Trainer("sgd"), grid=[{"eta": 0.1, "D": 2.0}], repeats=1)
    assert len(rep.aucs) == 1 and rep.std == 0.0 and 0.5 < rep.mean <= 1.0


def test_benchmark_deterministic_and_recomputable():
    ds = gaussian_classes(60, 3, seed=0)
    grid = [{"eta": e, "D": 2.0} for e in (0.01, 1.0)]
    a = benchmark(ds, Trainer("sgd", epochs=2), grid=grid, repeats=3, seed=5, folds=3)
    b = benchmark(ds, Trainer("sgd", epochs=2), grid=grid, repeats=3, seed=5, folds=3)
    assert a == b
    assert a.mean == pytest.approx(np.mean(a.aucs)) and a.std == pytest.approx(np.std(a.aucs, ddof=1))
    assert [r[0] for r in a.rows()] == [0, 1, 2]


def test_benchmark_parallel_matches_serial():
    ds = gaussian_classes(60, 3, seed=0)
    grid = [{"eta": 0.1, "D": 2.0}]
    a = benchmark(ds, Trainer("sgd", epochs=2), grid=grid, repeats=2, seed=1)
    b = benchmark(ds, Trainer("sgd", epochs=2), grid=grid, repeats=2, seed=1, jobs=2)
    assert a.aucs == b.aucs


@pytest.mark.parametrize("algo", ["ogd", "localized", "dp-smooth", "dp-nonsmooth"])
def test_trainer_algorithms_run(algo):
    ds = gaussian_classes(64, 3, seed=0)
    loss = "logistic" if algo == "dp-smooth" else "hinge"
    tr = Trainer(algo, loss, epsilon=1.0 if algo.startswith("dp") else None)
    w = tr(ds, {"eta": 0.1 if algo == "ogd" else None, "D": 2.0}, 0)
    assert w.shape == (3,) and np.all(np.isfinite(w)) and np.linalg.norm(w) <= 1.0 + 1e-12


def test_trainer_validation():
    with pytest.raises(ValueError):
        Trainer("adam")
    with pytest.raises(ValueError):
        Trainer("dp-smooth")


def test_running_average_matches_definition():
    traj = np.arange(12.0).reshape(6, 2)
    etas = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    got = running_average(traj, etas, "eta")
    delayed = [traj[0], traj[0], traj[1], traj[2], traj[3]]
    for t in range(1, 6):
        want = sum(etas[j] * delayed[j] for j in range(t)) / etas[:t].sum()
        assert np.allclose(got[t - 1], want, rtol=1e-15)
    assert np.array_equal(running_average(traj, etas, "last"), traj[1:])


def test_geometric_checkpoints():
    assert geometric_checkpoints(16).tolist() == [1, 2, 4, 8, 16]
    assert geometric_checkpoints(20).tolist() == [1, 2, 4, 8, 16, 20]


def test_log_slope():
    t = 2.0 ** np.arange(12)
    assert log_slope(t, 3 * t**-0.5, 100) == pytest.approx(-0.5)
    assert math.isnan(log_slope(t, np.zeros(12), 1))


def test_convergence_zero_gradient_exact():
    ds = Dataset(np.zeros((10, 2)), [1, -1] * 5)
    c = convergence_experiment(ds, HingeAUC(1.0), Constant(0.1), 64)
    assert c.exact and math.isnan(c.slope) and np.all(c.gap == 0) and np.all(c.wall_ns == 0)


def test_convergence_gap_smoothed_nonincreasing():
    ds = gaussian_classes(200, 5, seed=1)
    T = 2**12
    for seed in range(3):
        c = convergence_experiment(ds, HingeAUC(1.0), Constant(0.3 / math.sqrt(T)), T, seed=seed)
        m = median_filter(c.gap, size=5, mode="nearest")
        assert np.all(np.diff(m) <= 1e-12)


def test_convergence_timing_flag():
    ds = gaussian_classes(30, 2, seed=1)
    c = convergence_experiment(ds, HingeAUC(1.0), Constant(0.1), 32, timing=True)
    assert np.all(c.wall_ns > 0)


def test_csv_format(tmp_path):
    text = csv_text(BENCHMARK_HEADER, [(0, 123, 0.1), (1, 7, 2 / 3)])
    assert text == "run,seed,auc\n0,123,0.10000000000000001\n1,7,0.66666666666666663\n"
    p = write_csv(tmp_path / "sub" / "b.csv", BENCHMARK_HEADER, [(0, 1, 0.5)])
    assert p.read_text() == "run,seed,auc\n0,1,0.5\n"
    assert [f for f in os.listdir(p.parent) if f.endswith(".tmp")] == []


def test_atomic_write_keeps_old_file_on_failure(tmp_path):
    p = atomic_write(tmp_path / "x.txt", "old")

    class Boom:
        def __str__(self):
            raise RuntimeError

    with pytest.raises(TypeError):
        atomic_write(p, Boom())
    assert p.read_text() == "old" and os.listdir(tmp_path) == ["x.txt"]


def test_report_is_frozen():
    r = BenchmarkReport((0.5,), (1,), ({},))
    with pytest.raises(Exception):
        r.aucs = ()
