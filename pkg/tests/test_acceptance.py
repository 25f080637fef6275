"""End-to-end acceptance criteria; each test prints one PASS/FAIL line."""

import math

import numpy as np
import pytest

from pairsgd.cli import main
from pairsgd.data import load_builtin, standard_pipeline
from pairsgd.eval import Trainer, auc_brute, auc_score, benchmark, convergence_experiment
from pairsgd.localization import localized_sgd
from pairsgd.losses import (HingeAUC, LogisticAUC, LogitSquareAUC, MEEWindow, ProxRegularized,
                            SquareAUC, empirical_risk, empirical_risk_grad, loss_grad, loss_value)
from pairsgd.optimizer import PL, Constant, ProjectionBall, StronglyConvex, erm_solve
from pairsgd.privacy import chernoff_bound
from pairsgd.rng import RngStream
from pairsgd.stability import (adversarial_neighbor, coupled_run, mean_stability_estimate,
                               per_path_bound_smooth, sensitivity_failure_fraction)
from pairsgd.synthetic import gaussian_classes, pl_instance

BALL = ProjectionBall(1.0)


@pytest.fixture
def report(capsys):
    def _report(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail
    return _report


def _data(name):
    return standard_pipeline(load_builtin(name))


def test_auc_benchmark_hinge_sgd(report):
    bands = {"diabetes": (0.80, 0.86), "german": (0.76, 0.83)}
    res = {}
    for name, (lo, hi) in bands.items():
        rep = benchmark(_data(name), Trainer("sgd", "hinge"), repeats=25, seed=0, folds=5)
        res[name] = (rep.mean, rep.std, lo <= rep.mean <= hi)
    ok = all(r[2] for r in res.values())
    detail = "; ".join(f"{k} {m:.4f} +- {s:.4f} in {bands[k]}" for k, (m, s, _) in res.items())
    report("hinge-AUC SGD benchmark (25 repeats, 5-fold CV, 7x7 grid)", ok, detail)


def test_dp_smooth_benchmark(report):
    floors = {"diabetes": 0.73, "german": 0.67}
    parts, ok = [], True
    for name, floor in floors.items():
        ds = _data(name)
        m = {eps: benchmark(ds, Trainer("dp-smooth", "logistic", epsilon=eps), repeats=25, seed=0,
                            train_size=256).mean for eps in (0.2, 1.0, 2.0)}
        ok &= m[1.0] >= floor and m[2.0] >= m[0.2]
        parts.append(f"{name} eps=0.2/1/2 -> {m[0.2]:.4f}/{m[1.0]:.4f}/{m[2.0]:.4f} "
                     f"(need eps=1 >= {floor}, eps=2 >= eps=0.2)")
    report("DP localized SGD, logistic loss, n=256, delta=1/n", ok, "; ".join(parts))


def test_smooth_stability(report):
    S = gaussian_classes(50, 5, seed=0)
    loss = SquareAUC(1.0)
    G, eta = loss.constants.lipschitz_G, 2.0 / loss.constants.smoothness_L
    Sp = adversarial_neighbor(S)
    worst = max(float(np.max(tr.distances - per_path_bound_smooth(tr, G)))
                for tr in (coupled_run(S, Sp, loss, Constant(eta), 500, BALL, seed=s)
                           for s in range(100)))
    st = mean_stability_estimate(S, loss, Constant(eta), 500, BALL, 500, mode="smooth")
    ok = worst <= 1e-9 and st.violations == 0 and st.mean <= st.bound + 3 * st.stderr
    report("smooth per-path and mean stability (square-AUC, n=50, T=500, eta=2/L)", ok,
           f"max(d_t - B_t) = {worst:.3g} over 100 paths; mean {st.mean:.4g} "
           f"(stderr {st.stderr:.2g}) vs bound {st.bound:.4g}")


def test_nonsmooth_stability(report):
    S = gaussian_classes(100, 5, seed=0)
    st = mean_stability_estimate(S, HingeAUC(1.0), Constant(0.005), 400, BALL, 500, mode="nonsmooth")
    report("nonsmooth mean-square stability (hinge-AUC, n=100, eta=0.005, T=400)", st.passed,
           f"mean {st.mean:.4g} (stderr {st.stderr:.2g}) vs bound {st.bound:.4g}")


def test_optimization_rates(report):
    ds = gaussian_classes(200, 5, seed=1)
    T = 2**14
    cvx = convergence_experiment(ds, HingeAUC(1.0), Constant(0.3 / math.sqrt(T)), T, runs=3)
    reg = ProxRegularized(SquareAUC(1.0), 0.05, np.zeros(5))
    sc = convergence_experiment(ds, reg, StronglyConvex(reg.constants.strong_convexity_alpha), T,
                                ball=BALL, avg="index", runs=3)
    inst = pl_instance()
    pl = convergence_experiment(inst.data, inst.loss, PL(inst.mu), 2**13, ball=inst.ball,
                                avg="last", runs=10)
    ok = -0.75 <= cvx.slope <= -0.25 and -1.3 <= sc.slope <= -0.7 and pl.slope <= -0.7
    report("optimization slopes (convex, strongly convex, PL last iterate)", ok,
           f"convex {cvx.slope:.3f} in [-0.75,-0.25]; strongly convex {sc.slope:.3f} in "
           f"[-1.3,-0.7]; PL {pl.slope:.3f} <= -0.7")


def test_localized_excess_risk(report):
    S = gaussian_classes(512, 5, seed=11)
    loss = LogisticAUC(1.0)
    G, D = loss.constants.lipschitz_G, BALL.diameter
    w = localized_sgd(S, loss, BALL, seed=0).weights
    ref = erm_solve(gaussian_classes(1024, 5, seed=13), loss, BALL)
    test = gaussian_classes(10**4, 5, seed=12)
    excess = empirical_risk(loss, w, test) - empirical_risk(loss, ref, test)
    bound = 3 * G * D / math.sqrt(512)
    report("localized SGD excess risk (n=512, zeta=D/(G sqrt n))", excess <= bound,
           f"excess {excess:.4g} vs 3GD/sqrt(n) = {bound:.4g}")


def test_sensitivity_tail(report):
    S = gaussian_classes(50, 5, seed=3)
    frac, bound, dist = sensitivity_failure_fraction(S, SquareAUC(1.0), 0.05, BALL, n_runs=200,
                                                     gamma=0.1)
    report("high-probability sensitivity (200 coupled runs, t=n, gamma=0.1)", frac <= 0.1,
           f"failure fraction {frac:.3f}; max distance {dist.max():.4g} vs bound {bound:.4g}")


def test_chernoff_tail(report):
    mu, trials, m = 10.0, 10**5, 100
    u = RngStream(2024, "chernoff").uniform(trials * m).reshape(trials, m)
    X = (u < mu / m).sum(axis=1)
    emp = float(np.mean(X > 2 * mu))
    bound = chernoff_bound(mu, 1.0)
    report("Chernoff tail P[X > 2 mu] for mu=10", emp <= bound and bound == math.exp(-mu / 3),
           f"empirical {emp:.5f} vs exp(-mu/3) = {bound:.5f} over {trials} trials")


def _naive_risk(loss, w, X, y):
    n = len(y)
    return sum(loss.value(w, X[i], y[i], X[j], y[j])
               for i in range(n) for j in range(n) if i != j) / (n * (n - 1))


def _fd(f, w, h=1e-6):
    return np.array([(f(w + h * e) - f(w - h * e)) / (2 * h) for e in np.eye(len(w))])


def test_oracle_equivalences(report):
    rng = np.random.default_rng(0)
    auc_err = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 51))
        y = rng.choice([-1, 1], n)
        y[:2] = (1, -1)
        s = np.round(rng.normal(size=n), int(rng.integers(0, 3)))
        auc_err = max(auc_err, abs(auc_score(s, y) - auc_brute(s, y)))
    losses = [HingeAUC(1.0), SquareAUC(1.0), LogitSquareAUC(1.0), LogisticAUC(1.0),
              MEEWindow(1.0, 0.7)]
    risk_err = grad_err = 0.0
    for k in range(20):
        S = gaussian_classes(15, 4, seed=100 + k)
        w = rng.normal(size=4) * 0.4
        for loss in losses:
            risk_err = max(risk_err, abs(empirical_risk(loss, w, S) - _naive_risk(loss, w, S.X, S.y)))
            margins = [w @ (S.X[i] - S.X[j]) for i in range(15) for j in range(15)
                       if S.y[i] == 1 and S.y[j] == -1]
            if not loss.smooth and min(abs(1 - m) for m in margins) < 1e-3:
                continue
            g = empirical_risk_grad(loss, w, S)
            fd = _fd(lambda v: empirical_risk(loss, v, S), w)
            grad_err = max(grad_err, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8))
            z, zp = (S.X[0], 1), (S.X[1], -1)
            gp = loss_grad(loss, w, z, zp)
            fp = _fd(lambda v: loss_value(loss, v, z, zp), w)
            if loss.smooth or abs(1 - w @ (S.X[0] - S.X[1])) > 1e-3:
                grad_err = max(grad_err, np.linalg.norm(gp - fp) / max(np.linalg.norm(fp), 1e-8))
    ok = auc_err <= 1e-12 and risk_err <= 1e-12 and grad_err <= 1e-4
    report("oracle equivalences (AUC, empirical risk, gradients)", ok,
           f"AUC max err {auc_err:.2g}; risk max err {risk_err:.2g}; "
           f"gradient max rel err {grad_err:.2g}")


def test_cli_determinism(report, tmp_path):
    commands = {
        "train": ["--data", "builtin:diabetes", "--eta", "0.1", "--diameter", "10"],
        "benchmark": ["--data", "builtin:german", "--repeats", "2", "--eta", "0.1"],
        "stability": ["--n-seeds", "20"],
        "dp-train": ["--data", "builtin:diabetes", "--loss", "logistic", "--epsilon", "1"],
        "converge": ["--schedule", "strongly-convex", "--steps", "2048"],
    }
    bad = []
    for cmd, flags in commands.items():
        out = tmp_path / f"{cmd}.out"
        argv = [cmd, *flags, "--seed", "7", "--out", str(out)]
        snaps = []
        for _ in range(2):
            assert main(argv) == 0
            snaps.append({p.name: p.read_bytes() for p in sorted(tmp_path.glob(out.name + "*"))})
        if snaps[0] != snaps[1] or not snaps[0]:
            bad.append(cmd)
    report("byte-identical reruns of every command", not bad,
           f"{len(commands)} commands rerun; differing: {bad or 'none'}")
