"""Projected one-pair-per-step SGD / OGD and a full-batch ERM oracle.

At step ``t`` the fresh example ``z_{i_t}`` is paired only with the previous
one ``z_{i_{t-1}}``:

    w_t = Proj_W(w_{t-1} - eta_t * grad f(w_{t-1}; z_{i_t}, z_{i_{t-1}}))

and the output averages the *delayed* iterates ``w_{j-2}`` (``w_{-1} = w_0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .losses import ProxRegularized, _check, empirical_risk, empirical_risk_grad
from .rng import INDEX, RngStream


class NumericalFailure(ArithmeticError):
    """An iterate became non-finite."""


class UnsupportedOracle(ValueError):
    pass


@dataclass(frozen=True)
class ProjectionBall:
    """Euclidean ball of radius ``r`` centred at the origin."""

    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be a positive finite number, got {self.radius}")

    @classmethod
    def from_diameter(cls, D: float) -> "ProjectionBall":
        return cls(D / 2.0)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def project(self, w) -> np.ndarray:
        w, = _check(w)
        nrm = float(np.linalg.norm(w))
        if nrm <= self.radius:
            return w.copy()
        return w * (self.radius / nrm)


def project(w, ball: ProjectionBall) -> np.ndarray:
    return ball.project(w)


# ------------------------------------------------------------------ schedules


@dataclass(frozen=True)
class Constant:
    eta: float

    def __call__(self, j: int) -> float:
        return self.eta


@dataclass(frozen=True)
class StronglyConvex:
    """``eta_j = 2 / (alpha (j + 1))``."""

    alpha: float

    def __call__(self, j: int) -> float:
        return 2.0 / (self.alpha * (j + 1))


@dataclass(frozen=True)
class PL:
    """``eta_j = 2 / (mu (j + 1))``."""

    mu: float

    def __call__(self, j: int) -> float:
        return 2.0 / (self.mu * (j + 1))


@dataclass(frozen=True)
class PhaseProx:
    """``eta_j = zeta_k n_k / (j + 1)``: the strongly convex schedule for modulus ``2/(zeta_k n_k)``."""

    zeta: float
    n_k: int

    def __call__(self, j: int) -> float:
        return self.zeta * self.n_k / (j + 1)


def schedule_params(schedule) -> dict:
    return {"schedule": type(schedule).__name__, **schedule.__dict__}


AVERAGING = ("eta", "index", "last")


# ---------------------------------------------------------------------- result


@dataclass(frozen=True)
class TrainResult:
    averaged: np.ndarray
    last: np.ndarray
    seed: int | None
    steps: int
    indices: np.ndarray | None = None
    step_norms: np.ndarray | None = None
    trajectory: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def _run(X, y, order, loss, schedule, T, ball, avg, w0, diagnostics, keep_trajectory):
    """Shared update loop; ``order[t]`` is the row used at step ``t`` (``order[0]`` = initial)."""
    if avg not in AVERAGING:
        raise ValueError(f"averaging must be one of {AVERAGING}, got {avg!r}")
    d = X.shape[1]
    w0 = np.zeros(d) if w0 is None else ball.project(w0)
    if isinstance(loss, ProxRegularized):
        base, coef, anchor = loss.base, loss.coef, loss.anchor
    else:
        base, coef, anchor = loss, 0.0, None
    gated = base.gated
    dphi = base.dphi
    r = ball.radius
    r2 = r * r
    ylist = y.tolist()

    acc = np.zeros(d)
    wsum = 0.0
    older = w0          # w_{j-2}
    cur = w0            # w_{j-1}
    norms = np.empty(T) if diagnostics else None
    traj = np.empty((T + 1, d)) if keep_trajectory else None
    if traj is not None:
        traj[0] = w0

    for j in range(1, T + 1):
        eta = schedule(j)
        if avg == "eta":
            acc += eta * older
            wsum += eta
        elif avg == "index":
            acc += j * older
            wsum += j
        i, k = order[j], order[j - 1]
        yi, yk = ylist[i], ylist[k]
        if gated and not (yi == 1 and yk == -1):
            new = cur
        else:
            diff = X[i] - X[k]
            c = dphi(float(cur @ diff), yi, yk)
            new = cur - (eta * c) * diff if c != 0.0 else cur
        if coef:
            new = new - (2.0 * eta * coef) * (cur - anchor)
        if new is not cur:
            sq = float(new @ new)
            if not math.isfinite(sq):
                raise NumericalFailure(f"non-finite iterate at step {j}")
            if sq > r2:
                new = new * (r / math.sqrt(sq))
        if norms is not None:
            norms[j - 1] = 0.0 if new is cur else float(np.linalg.norm(new - cur))
        if traj is not None:
            traj[j] = new
        older, cur = cur, new

    averaged = cur.copy() if avg == "last" else acc / wsum
    return averaged, cur.copy(), norms, traj


def sgd_pairwise(S, loss, schedule, T: int, ball: ProjectionBall, avg: str = "eta", seed=0,
                 w0=None, diagnostics: bool = False, keep_trajectory: bool = False,
                 rng: RngStream | None = None) -> TrainResult:
    """Run ``T`` projected steps on dataset ``S``; deterministic given ``seed`` (or ``rng``)."""
    n = len(S.y)
    if n < 2:
        raise ValueError("sgd_pairwise needs at least two examples")
    if T < 1:
        raise ValueError("T must be >= 1")
    stream = RngStream(seed, INDEX) if rng is None else rng
    order = stream.integers(n, T + 1)
    averaged, last, norms, traj = _run(S.X, S.y, order.tolist(), loss, schedule, T, ball, avg,
                                       w0, diagnostics, keep_trajectory)
    return TrainResult(averaged, last, stream.seed, T,
                       indices=order if diagnostics else None,
                       step_norms=norms, trajectory=traj)


def ogd_pairwise(stream, loss, schedule, ball: ProjectionBall, avg: str = "eta", seed=None,
                 w0=None, diagnostics: bool = False, keep_trajectory: bool = False) -> TrainResult:
    """One update per received datum after ``z_0``, pairing ``z_t`` with ``z_{t-1}``.

    ``stream`` is a :class:`~pairsgd.data.Dataset`, a sequence of ``Example``
    objects, or a sequence of ``(x, y)`` tuples.
    """
    if hasattr(stream, "X") and hasattr(stream, "y"):
        X, y = stream.X, stream.y
    else:
        items = list(stream)
        if len(items) < 2:
            raise ValueError("stream must yield at least two examples")
        if hasattr(items[0], "indices"):
            d = max((e.indices[-1] + 1 for e in items if e.indices), default=0)
            X = np.array([e.dense(d) for e in items])
            y = np.array([e.label for e in items])
        else:
            X = np.array([np.asarray(x, dtype=np.float64) for x, _ in items])
            y = np.array([lab for _, lab in items])
    if len(y) < 2:
        raise ValueError("stream must yield at least two examples")
    T = len(y) - 1
    averaged, last, norms, traj = _run(X, y, list(range(T + 1)), loss, schedule, T, ball, avg,
                                       w0, diagnostics, keep_trajectory)
    return TrainResult(averaged, last, seed, T, step_norms=norms, trajectory=traj)


# ------------------------------------------------------------------ ERM oracle


def erm_solve(S, loss, ball: ProjectionBall, tol: float = 1e-9, max_iter: int = 20000,
              w0=None) -> np.ndarray:
    """Ball-constrained minimiser of the empirical pairwise risk (convex losses only).

    Smooth losses: accelerated projected gradient with backtracking, stopped
    when ``||w_k - w_{k-1}|| <= tol``.  Nonsmooth hinge losses: the equivalent
    second-order cone program solved with cvxpy.
    """
    if not loss.convex:
        raise UnsupportedOracle(f"erm_solve needs a convex loss, got {loss.kind!r}")
    d = S.X.shape[1]
    w0 = np.zeros(d) if w0 is None else ball.project(w0)
    if not np.any(empirical_risk_grad(loss, w0, S)) and _no_active_pairs(loss, S):
        return w0
    if loss.smooth:
        return _apg(S, loss, ball, tol, max_iter, w0)
    return _hinge_socp(S, loss, ball)


def _no_active_pairs(loss, S):
    if not loss.gated:
        return False
    return not (np.any(S.y == 1) and np.any(S.y == -1))


def _apg(S, loss, ball, tol, max_iter, w0):
    L = 1.0
    x_prev = w0.copy()
    f_prev = empirical_risk(loss, x_prev, S)
    yk = w0.copy()
    tk = 1.0
    for _ in range(max_iter):
        g = empirical_risk_grad(loss, yk, S)
        fy = empirical_risk(loss, yk, S)
        while True:
            x = ball.project(yk - g / L)
            step = x - yk
            fx = empirical_risk(loss, x, S)
            if fx <= fy + float(g @ step) + 0.5 * L * float(step @ step) + 1e-15:
                break
            L *= 2.0
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        moved = float(np.linalg.norm(x - x_prev))
        yk = x + ((tk - 1.0) / t_next) * (x - x_prev)
        # restart momentum when it stops helping
        if fx > f_prev:
            yk, t_next = x.copy(), 1.0
        x_prev, f_prev, tk = x, fx, t_next
        L = max(L * 0.9, 1e-12)
        if moved <= tol:
            break
    return x_prev


def _hinge_socp(S, loss, ball):
    import cvxpy as cp

    base = loss.base if isinstance(loss, ProxRegularized) else loss
    if base.kind != "hinge":
        raise UnsupportedOracle(f"no nonsmooth oracle for {base.kind!r}")
    X, y = S.X, S.y
    n = len(y)
    pos, neg = X[y == 1], X[y == -1]
    diffs = (pos[:, None, :] - neg[None, :, :]).reshape(-1, X.shape[1])
    prox = isinstance(loss, ProxRegularized) and loss.coef
    if len(diffs) == 0:
        # no (+, -) pair: only the prox term (if any) is left
        return ball.project(loss.anchor) if prox else np.zeros(X.shape[1])
    w = cp.Variable(X.shape[1])
    obj = cp.sum(cp.pos(1 - diffs @ w)) / (n * (n - 1))
    if prox:
        obj = obj + loss.coef * cp.sum_squares(w - loss.anchor)
    prob = cp.Problem(cp.Minimize(obj), [cp.norm(w, 2) <= ball.radius])
    prob.solve(solver=cp.CLARABEL)
    if w.value is None:
        raise NumericalFailure(f"hinge ERM solve failed: {prob.status}")
    return ball.project(np.asarray(w.value, dtype=np.float64))
