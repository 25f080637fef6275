"""Small synthetic pairwise-learning instances with features inside the unit ball."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .data import Dataset
from .losses import LogitSquareAUC, empirical_risk, empirical_risk_grad
from .optimizer import ProjectionBall
from .rng import RngStream


def gaussian_classes(n: int, d: int = 5, seed=0, separation: float = 1.0, noise: float = 1.0,
                     pos_frac: float = 0.5, shrink: bool = True) -> Dataset:
    """Two isotropic Gaussian classes with means ``+-separation/2`` along the all-ones direction.

    With ``shrink`` the cloud is rescaled so typical rows have norm about 0.45;
    otherwise noise has per-coordinate variance ``noise^2/d``.  Rows are then
    clipped into the unit ball.  Different seeds draw from the same
    distribution, so a fresh seed gives a held-out sample.
    """
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    e = np.ones(d) / np.sqrt(d)
    rng = RngStream(seed, "synthetic")
    y = np.where(rng.uniform(n) < pos_frac, 1, -1)
    Z = rng.standard_normal(n * d).reshape(n, d)
    if shrink:
        X = (noise * Z + 0.5 * separation * y[:, None] * e) / (2.0 * np.sqrt(d) * noise + separation)
    else:
        X = noise * Z / np.sqrt(d) + 0.5 * separation * y[:, None] * e
    X /= np.maximum(1.0, np.linalg.norm(X, axis=1))[:, None]
    return Dataset(X, y, {"source": "synthetic:gaussian_classes", "n": n, "d": d,
                          "separation": separation, "noise": noise})


def stream(n: int, d: int = 5, seed=0, **kw):
    """``(x, y)`` tuples for the online setting."""
    ds = gaussian_classes(n, d, seed=seed, **kw)
    return [(ds.X[i], int(ds.y[i])) for i in range(ds.n)]


@dataclass(frozen=True)
class PLInstance:
    data: Dataset
    loss: LogitSquareAUC
    ball: ProjectionBall
    w_star: np.ndarray
    risk_star: float
    mu: float           # smallest Hessian eigenvalue at the interior minimiser


def pl_instance(n: int = 200, d: int = 2, seed=1, separation: float = 0.5,
                radius: float = 5.0) -> PLInstance:
    """Nonconvex logit-square AUC problem whose minimiser lies inside the ball.

    Low class separation keeps the minimiser interior; the local PL modulus is
    read off the finite-difference Hessian there.
    """
    ds = gaussian_classes(n, d, seed=seed, separation=separation, shrink=False)
    loss = LogitSquareAUC(radius)
    res = minimize(lambda w: empirical_risk(loss, w, ds), np.zeros(d),
                   jac=lambda w: empirical_risk_grad(loss, w, ds), method="BFGS",
                   options={"gtol": 1e-12})
    w = res.x
    if np.linalg.norm(w) >= radius:
        raise ValueError("minimiser is not interior; lower the separation or enlarge the ball")
    h = 1e-5
    H = np.array([(empirical_risk_grad(loss, w + h * e, ds) - empirical_risk_grad(loss, w - h * e, ds))
                  / (2 * h) for e in np.eye(d)])
    mu = float(np.linalg.eigvalsh(0.5 * (H + H.T)).min())
    if mu <= 0:
        raise ValueError("Hessian at the minimiser is not positive definite")
    return PLInstance(ds, loss, ProjectionBall(radius), w, float(res.fun), mu)
