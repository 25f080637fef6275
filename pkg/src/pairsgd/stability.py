"""Coupled runs on neighbouring datasets and empirical stability checks.

Two executions of pairwise SGD share one index stream and one starting point;
the only difference is the example at position ``rho``.  The per-step
distance ``d_t = ||w_t - w'_t||`` is then compared with the analytic bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Example
from .optimizer import Constant, _run
from .privacy import sensitivity_bound_hp
from .rng import INDEX, RngStream, derive_seed

STABILITY_HEADER = ("seed", "T", "d_T", "bound_T", "hits")


def make_neighbor(S: Dataset, rho: int, z_new) -> Dataset:
    """Copy of ``S`` with row ``rho`` (0-based) replaced by ``z_new``.

    ``z_new`` is an :class:`Example` or an ``(x, y)`` pair.
    """
    n, d = S.X.shape
    if not 0 <= rho < n:
        raise IndexError(f"rho={rho} out of range for n={n}")
    if isinstance(z_new, Example):
        x, y = z_new.dense(d), z_new.label
    else:
        x, y = z_new
        x = np.asarray(x, dtype=np.float64)
    if x.shape != (d,):
        raise ValueError(f"replacement has shape {x.shape}, expected ({d},)")
    X = S.X.copy()
    Y = S.y.copy()
    X[rho] = x
    Y[rho] = y
    return Dataset(X, Y, {**S.meta, "neighbor_of": rho})


def adversarial_neighbor(S: Dataset, rho: int | None = None) -> Dataset:
    """Neighbour with the ``rho``-th example's label flipped and its features negated."""
    rho = S.n - 1 if rho is None else rho
    return make_neighbor(S, rho, (-S.X[rho], -S.y[rho]))


@dataclass(frozen=True)
class CoupledTrace:
    distances: np.ndarray      # d_t for t = 0..T
    indices: np.ndarray        # i_0..i_T (0-based)
    rho: int
    avg_distance: float        # ||w-bar_T - w-bar'_T||
    etas: np.ndarray           # eta_1..eta_T

    @property
    def T(self) -> int:
        return len(self.indices) - 1

    @property
    def hit_mask(self) -> np.ndarray:
        """``1[i_t = rho or i_{t-1} = rho]`` for t = 1..T."""
        hit = self.indices == self.rho
        return hit[1:] | hit[:-1]

    @property
    def hits(self) -> int:
        return int(self.hit_mask.sum())


def coupled_run(S: Dataset, S_prime: Dataset, loss, schedule, T: int, ball, seed=0,
                avg: str = "eta", rho: int | None = None, w0=None) -> CoupledTrace:
    """Run pairwise SGD on ``S`` and ``S'`` with one shared index sequence."""
    if S.X.shape != S_prime.X.shape:
        raise ValueError(f"size mismatch: {S.X.shape} vs {S_prime.X.shape}")
    n = S.n
    if rho is None:
        diff = np.flatnonzero(np.any(S.X != S_prime.X, axis=1) | (S.y != S_prime.y))
        rho = int(diff[0]) if len(diff) else n - 1
    order = RngStream(seed, INDEX).integers(n, T + 1)
    idx = order.tolist()
    a, _, _, tr = _run(S.X, S.y, idx, loss, schedule, T, ball, avg, w0, False, True)
    b, _, _, tr2 = _run(S_prime.X, S_prime.y, idx, loss, schedule, T, ball, avg, w0, False, True)
    dist = np.linalg.norm(tr - tr2, axis=1)
    etas = np.array([schedule(j) for j in range(1, T + 1)])
    return CoupledTrace(dist, order, int(rho), float(np.linalg.norm(a - b)), etas)


def per_path_bound_smooth(trace: CoupledTrace, G: float, schedule=None) -> np.ndarray:
    """Running bound ``B_t = 2G sum_{j<=t} eta_j 1[i_j = rho or i_{j-1} = rho]``, t = 0..T."""
    etas = trace.etas if schedule is None else np.array(
        [schedule(j) for j in range(1, trace.T + 1)])
    return np.concatenate(([0.0], np.cumsum(2.0 * G * etas * trace.hit_mask)))


@dataclass(frozen=True)
class StabilityStats:
    mode: str
    values: np.ndarray         # per-seed statistic
    seeds: tuple
    mean: float
    stderr: float
    bound: float
    violations: int            # per-path violations (smooth mode only)
    rows: tuple                # (seed, T, d_T, bound_T, hits)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.mean <= self.bound + 3.0 * self.stderr and self.violations == 0


def smooth_mean_bound(G: float, n: int, etas) -> float:
    """``(4G/n) sum_j eta_j``."""
    return 4.0 * G / n * float(np.sum(etas))


def nonsmooth_sq_bound(G: float, eta: float, T: int, n: int) -> float:
    """``4 e G^2 eta^2 (5T + 4T^2/n^2)``."""
    return 4.0 * math.e * G * G * eta * eta * (5.0 * T + 4.0 * T * T / (n * n))


def mean_stability_estimate(S: Dataset, loss, schedule, T: int, ball, n_seeds: int,
                            mode: str | None = None, S_prime: Dataset | None = None,
                            rho: int | None = None, seed=0, tol: float = 1e-9) -> StabilityStats:
    """Monte Carlo stability over ``n_seeds`` coupled runs.

    ``mode="smooth"`` averages ``||w-bar_T - w-bar'_T||`` against ``(4G/n) sum eta_j``
    and counts per-path violations; ``mode="nonsmooth"`` averages
    ``||w_T - w'_T||^2`` against ``4 e G^2 eta^2 (5T + 4T^2/n^2)`` (constant step).
    The default neighbour flips the label and negates the features at ``rho = n-1``.
    """
    if n_seeds < 10:
        raise ValueError(f"n_seeds must be >= 10, got {n_seeds}")
    mode = mode or ("smooth" if loss.smooth else "nonsmooth")
    if mode not in ("smooth", "nonsmooth"):
        raise ValueError(f"mode must be 'smooth' or 'nonsmooth', got {mode!r}")
    rho = S.n - 1 if rho is None else rho
    neighbor = "given"
    if S_prime is None:
        S_prime = adversarial_neighbor(S, rho)
        neighbor = "label flip + feature negation"
    G = loss.constants.lipschitz_G
    n = S.n
    etas = np.array([schedule(j) for j in range(1, T + 1)])
    if mode == "smooth":
        bound = smooth_mean_bound(G, n, etas)
    else:
        if np.ptp(etas) != 0.0:
            raise ValueError("the nonsmooth bound assumes a constant step size")
        bound = nonsmooth_sq_bound(G, float(etas[0]), T, n)
    seeds, vals, rows = [], [], []
    violations = 0
    for s in range(n_seeds):
        sd = derive_seed(seed, s)
        tr = coupled_run(S, S_prime, loss, schedule, T, ball, sd, rho=rho)
        dT = float(tr.distances[-1])
        if mode == "smooth":
            B = per_path_bound_smooth(tr, G)
            violations += int(np.any(tr.distances - B > tol))
            vals.append(tr.avg_distance)
            rows.append((sd, T, dT, float(B[-1]), tr.hits))
        else:
            vals.append(dT * dT)
            rows.append((sd, T, dT, bound, tr.hits))
        seeds.append(sd)
    v = np.array(vals)
    stderr = float(v.std(ddof=1) / math.sqrt(len(v)))
    meta = {"neighbor": neighbor, "rho": rho, "G": G, "n": n, "T": T}
    return StabilityStats(mode, v, tuple(seeds), float(v.mean()), stderr, bound, violations,
                          tuple(rows), meta)


def sensitivity_failure_fraction(S: Dataset, loss, eta: float, ball, n_runs: int = 200,
                                 gamma: float = 0.1, t: int | None = None, seed=0,
                                 S_prime: Dataset | None = None):
    """Fraction of coupled runs whose ``||w-bar_t - w-bar'_t||`` exceeds the
    high-probability sensitivity bound at confidence ``gamma``.

    Returns ``(fraction, bound, distances)``.
    """
    t = S.n if t is None else t
    S_prime = adversarial_neighbor(S) if S_prime is None else S_prime
    bound = sensitivity_bound_hp(loss.constants.lipschitz_G, eta, t, S.n, gamma).value
    dist = np.array([coupled_run(S, S_prime, loss, Constant(eta), t, ball,
                                 derive_seed(seed, r)).avg_distance for r in range(n_runs)])
    return float(np.mean(dist > bound)), bound, dist
