"""AUC, cross-validation, repeated-split benchmarks, convergence curves and CSV output."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .data import Dataset, kfold_indices, split
from .localization import DPConfig, dp_localized_sgd_nonsmooth, dp_localized_sgd_smooth, localized_sgd
from .losses import empirical_risk, make_loss
from .optimizer import AVERAGING, Constant, ProjectionBall, _run, erm_solve, ogd_pairwise, sgd_pairwise
from .rng import INDEX, SHUFFLE, RngStream, derive_seed

GRID = tuple(10.0**k for k in range(-3, 4))
ALGORITHMS = ("sgd", "ogd", "localized", "dp-smooth", "dp-nonsmooth")
PRIVATE = ("dp-smooth", "dp-nonsmooth")

BENCHMARK_HEADER = ("run", "seed", "auc")
CURVE_HEADER = ("t", "gap", "wall_ns")


class UndefinedAUC(ValueError):
    """AUC needs at least one positive and one negative example."""


# ------------------------------------------------------------------------ AUC


def _split_scores(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D and equally long")
    pos, neg = y == 1, y == -1
    if not (pos | neg).all():
        raise ValueError("labels must be +1 / -1")
    if not pos.any() or not neg.any():
        raise UndefinedAUC("AUC undefined for single-class labels")
    return s, pos, neg


def auc_score(scores, labels) -> float:
    """Rank-based AUC (Mann-Whitney) with ties counted one half."""
    s, pos, neg = _split_scores(scores, labels)
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    ranks = rankdata(s)               # average ranks resolve ties
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_brute(scores, labels) -> float:
    """Direct double loop over (positive, negative) pairs."""
    s, pos, neg = _split_scores(scores, labels)
    total = 0.0
    for a in s[pos]:
        for b in s[neg]:
            total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (pos.sum() * neg.sum())


# ------------------------------------------------------------------- trainers


@dataclass(frozen=True)
class Trainer:
    """Picklable ``(dataset, params, seed) -> weights`` for one algorithm.

    ``params`` carries ``eta`` (step size, or base step for the phased
    algorithms; ``None`` means the algorithm's default) and ``D`` (ball
    diameter).  ``epochs`` sets ``T = epochs * n`` for ``sgd``.
    """

    algo: str = "sgd"
    loss: str = "hinge"
    epochs: float = 5.0
    steps: int | None = None
    epsilon: float | None = None
    delta: float | None = None
    loss_params: tuple = ()

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"algo must be one of {ALGORITHMS}, got {self.algo!r}")
        if self.algo in PRIVATE and self.epsilon is None:
            raise ValueError(f"{self.algo} needs epsilon")

    def make_loss(self, D: float):
        return make_loss(self.loss, radius=D / 2.0, **dict(self.loss_params))

    def budget(self, n: int) -> int:
        return int(self.steps) if self.steps else max(1, int(round(self.epochs * n)))

    def fit_result(self, ds: Dataset, params: dict, seed):
        D = float(params["D"])
        eta = params.get("eta")
        loss = self.make_loss(D)
        ball = ProjectionBall.from_diameter(D)
        if self.algo == "sgd":
            return sgd_pairwise(ds, loss, Constant(eta), self.budget(ds.n), ball, seed=seed)
        if self.algo == "ogd":
            order = RngStream(seed, SHUFFLE).child("ogd").permutation(ds.n)
            return ogd_pairwise(ds.subset(order), loss, Constant(eta), ball, seed=seed)
        if self.algo == "localized":
            return localized_sgd(ds, loss, ball, zeta=eta, seed=seed)
        dp = self.dp_config(ds, loss, D)
        if self.algo == "dp-smooth":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return dp_localized_sgd_smooth(ds, loss, dp, seed=seed, eta=eta)
        return dp_localized_sgd_nonsmooth(ds, loss, dp, seed=seed, zeta=eta)

    def dp_config(self, ds: Dataset, loss, D: float) -> DPConfig:
        delta = 1.0 / ds.n if self.delta is None else self.delta
        return DPConfig(self.epsilon, delta, loss.constants.lipschitz_G, D, ds.d)

    def __call__(self, ds: Dataset, params: dict, seed) -> np.ndarray:
        res = self.fit_result(ds, params, seed)
        return res.averaged if hasattr(res, "averaged") else res.weights


def default_grid(algo: str, etas=GRID, diameters=GRID) -> list:
    """``eta x D`` for plain SGD/OGD; phased algorithms derive their own steps, so ``D`` only."""
    if algo in ("sgd", "ogd"):
        return [{"eta": e, "D": D} for e in etas for D in diameters]
    return [{"eta": None, "D": D} for D in diameters]


# ---------------------------------------------------------- cross-validation


@dataclass(frozen=True)
class CVResult:
    best: dict
    score: float
    table: tuple          # (params, mean validation AUC or nan)


def _key(p):
    eta = p.get("eta")
    return (-math.inf if eta is None else eta, p["D"])


def cross_validate(train: Dataset, fit, grid, k: int = 5, seed=0) -> CVResult:
    """Mean validation AUC over ``k`` folds per grid point; ties go to smaller eta, then smaller D."""
    grid = list(grid)
    if not grid:
        raise ValueError("empty grid")
    folds = kfold_indices(train.n, k, seed)
    usable = []
    for f, val in enumerate(folds):
        yv = train.y[val]
        if not ((yv == 1).any() and (yv == -1).any()):
            warnings.warn(f"fold {f} has a single class; skipped", stacklevel=2)
            continue
        tr = np.setdiff1d(np.arange(train.n), val)
        usable.append((f, train.subset(tr), train.subset(val)))
    if not usable:
        raise UndefinedAUC("every fold is single-class")
    table = []
    for p in grid:
        aucs = [auc_score(va.X @ fit(tr, p, derive_seed(seed, f + 1)), va.y) for f, tr, va in usable]
        table.append((dict(p), float(np.mean(aucs))))
    best_p, best_s = min(table, key=lambda r: (-r[1], _key(r[0])))
    return CVResult(best_p, best_s, tuple(table))


# ------------------------------------------------------------------ benchmark


@dataclass(frozen=True)
class BenchmarkReport:
    aucs: tuple
    seeds: tuple
    params: tuple         # chosen grid point per run
    config: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(np.mean(self.aucs))

    @property
    def std(self) -> float:
        return float(np.std(self.aucs, ddof=1)) if len(self.aucs) > 1 else 0.0

    def rows(self):
        return [(r, s, a) for r, (s, a) in enumerate(zip(self.seeds, self.aucs))]


def _one_run(ds, fit, grid, folds, train_frac, train_size, master, run):
    rs = derive_seed(master, run)
    train, test = split(ds, train_frac, rs)
    if train_size is not None:
        if train_size > train.n:
            raise ValueError(f"train_size={train_size} exceeds training split {train.n}")
        train = train.subset(np.arange(train_size))
    if len(grid) == 1:
        best = dict(grid[0])
    else:
        best = cross_validate(train, fit, grid, folds, rs).best
    w = fit(train, best, rs)
    return rs, auc_score(test.X @ w, test.y), best


def benchmark(ds: Dataset, fit, grid=None, repeats: int = 25, seed=0, folds: int = 5,
              train_frac: float = 0.8, train_size: int | None = None,
              jobs: int = 1) -> BenchmarkReport:
    """Repeated 80/20 splits: CV on train, refit with the best point, AUC on test.

    Run ``r`` uses seed ``derive_seed(seed, r)``; fold ``f`` inside it uses
    ``derive_seed(run_seed, f + 1)``.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    grid = default_grid(getattr(fit, "algo", "sgd")) if grid is None else list(grid)
    args = [(ds, fit, grid, folds, train_frac, train_size, seed, r) for r in range(repeats)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            out = list(ex.map(_one_run, *zip(*args)))
    else:
        out = [_one_run(*a) for a in args]
    seeds, aucs, params = zip(*out)
    config = {"repeats": repeats, "folds": folds, "train_frac": train_frac,
              "train_size": train_size, "master_seed": seed, "grid_size": len(grid),
              "seed_rule": "derive_seed(master, run); folds derive_seed(run_seed, fold+1)"}
    if isinstance(fit, Trainer):
        config.update(algo=fit.algo, loss=fit.loss, epochs=fit.epochs, steps=fit.steps,
                      epsilon=fit.epsilon, delta=fit.delta)
    return BenchmarkReport(tuple(aucs), tuple(seeds), tuple(params), config)


# ---------------------------------------------------------------- convergence


@dataclass(frozen=True)
class ConvergenceCurve:
    t: np.ndarray
    gap: np.ndarray
    wall_ns: np.ndarray
    slope: float
    reference: float
    exact: bool           # gap identically zero

    def rows(self):
        return list(zip(self.t.tolist(), self.gap.tolist(), self.wall_ns.tolist()))


def geometric_checkpoints(T: int) -> np.ndarray:
    t = 2 ** np.arange(int(math.log2(T)) + 1)
    return np.unique(np.append(t, T))


def running_average(traj: np.ndarray, etas: np.ndarray, avg: str) -> np.ndarray:
    """``w-bar_t`` for every ``t = 1..T`` from a stored trajectory ``w_0..w_T``."""
    T = len(traj) - 1
    if avg == "last":
        return traj[1:]
    weights = etas if avg == "eta" else np.arange(1, T + 1, dtype=np.float64)
    delayed = np.vstack([traj[:1], traj[:-2]])          # w_{j-2}, with w_{-1} = w_0
    return np.cumsum(weights[:, None] * delayed, axis=0) / np.cumsum(weights)[:, None]


def log_slope(t, gap, start: float) -> float:
    sel = (t >= start) & (gap > 0)
    if sel.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(t[sel]), np.log(gap[sel]), 1)[0])


def reference_value(ds, loss, ball, schedule=None, T=None, seed=0, proxy_runs: int = 20) -> float:
    """``F_S(w*_S)`` via :func:`erm_solve`, or the best of ``proxy_runs`` long runs for nonconvex losses."""
    if loss.convex:
        return empirical_risk(loss, erm_solve(ds, loss, ball), ds)
    if schedule is None or T is None:
        raise ValueError("nonconvex reference needs a schedule and horizon")
    best = math.inf
    for r in range(proxy_runs):
        res = sgd_pairwise(ds, loss, schedule, 4 * T, ball, avg="last",
                           rng=RngStream(derive_seed(seed, 10_000 + r), INDEX))
        best = min(best, empirical_risk(loss, res.last, ds))
    return best


def convergence_experiment(ds: Dataset, loss, schedule, T: int, checkpoints=None, seed=0,
                           ball: ProjectionBall | None = None, avg: str = "eta", runs: int = 1,
                           reference: float | None = None, timing: bool = False) -> ConvergenceCurve:
    """``F_S(w-bar_t) - F_S(reference)`` at checkpoints, averaged over ``runs`` seeds.

    The slope is the least-squares fit of log gap on log t over the last decade
    (``t >= T/10``).  ``wall_ns`` holds the time of a ``t``-step run when
    ``timing`` is on and zeros otherwise, so default output is reproducible.
    """
    if avg not in AVERAGING:
        raise ValueError(f"averaging must be one of {AVERAGING}")
    ball = ProjectionBall(loss.radius) if ball is None else ball
    t = geometric_checkpoints(T) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    if t.min() < 1 or t.max() > T:
        raise ValueError("checkpoints must lie in [1, T]")
    if reference is None:
        reference = reference_value(ds, loss, ball, schedule, T, seed)
    etas = np.array([schedule(j) for j in range(1, T + 1)])
    gaps = np.zeros(len(t))
    wall = np.zeros(len(t), dtype=np.int64)
    for r in range(runs):
        stream = RngStream(derive_seed(seed, r), INDEX)
        order = stream.integers(ds.n, T + 1).tolist()
        _, _, _, traj = _run(ds.X, ds.y, order, loss, schedule, T, ball, avg, None, False, True)
        w = running_average(traj, etas, avg)
        gaps += [empirical_risk(loss, w[c - 1], ds) - reference for c in t]
        if timing and r == 0:
            for i, c in enumerate(t):
                t0 = time.perf_counter_ns()
                _run(ds.X, ds.y, order[:c + 1], loss, schedule, int(c), ball, avg, None, False, False)
                wall[i] = time.perf_counter_ns() - t0
    gaps /= runs
    gaps = np.where(np.abs(gaps) < 1e-15, 0.0, gaps)
    exact = bool(np.all(gaps == 0.0))
    slope = float("nan") if exact else log_slope(t, gaps, T / 10.0)
    return ConvergenceCurve(t, gaps, wall, slope, float(reference), exact)


# ------------------------------------------------------------------------ CSV


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def atomic_write(path, text: str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows) -> Path:
    return atomic_write(path, csv_text(header, rows))
