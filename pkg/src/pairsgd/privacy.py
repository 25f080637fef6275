"""Gaussian-mechanism calibration and the high-probability sensitivity tools.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RngStream


def _positive(**kw):
    for name, v in kw.items():
        if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be a positive finite number, got {v!r}")


def _unit(name, v):
    if not 0.0 < v < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {v!r}")


def noise_scale_smooth(G: float, eta_k: float, delta: float, epsilon: float) -> float:
    """``12 G eta_k log(4/delta) sqrt(2 log(2.5/delta)) / epsilon``."""
    _positive(G=G, eta_k=eta_k, epsilon=epsilon)
    _unit("delta", delta)
    return 12.0 * G * eta_k * math.log(4.0 / delta) * math.sqrt(2.0 * math.log(2.5 / delta)) / epsilon


def noise_scale_nonsmooth(G: float, zeta_k: float, delta: float, epsilon: float) -> float:
    """``4 G zeta_k sqrt(log(2.5/delta)) / epsilon`` (no sqrt(2) factor, as stated for this variant)."""
    _positive(G=G, zeta_k=zeta_k, epsilon=epsilon)
    _unit("delta", delta)
    return 4.0 * G * zeta_k * math.sqrt(math.log(2.5 / delta)) / epsilon


def gaussian_mechanism_scale(sensitivity: float, delta: float, epsilon: float) -> float:
    """``Delta sqrt(2 log(2.5/delta)) / epsilon`` for a sensitivity holding w.p. ``1 - delta/2``."""
    _positive(sensitivity=sensitivity, epsilon=epsilon)
    _unit("delta", delta)
    return sensitivity * math.sqrt(2.0 * math.log(2.5 / delta)) / epsilon


@dataclass(frozen=True)
class SensitivityBound:
    gamma: float
    value: float


def sensitivity_bound_hp(G: float, eta: float, t: int, n: int, gamma: float) -> SensitivityBound:
    """``4 G eta (t/n + log(2/gamma) + sqrt(t log(2/gamma) / n))``, holding w.p. ``>= 1 - gamma``."""
    _positive(G=G, eta=eta, t=t, n=n)
    _unit("gamma", gamma)
    lg = math.log(2.0 / gamma)
    return SensitivityBound(gamma, 4.0 * G * eta * (t / n + lg + math.sqrt(t * lg / n)))


def gaussian_vector(d: int, sigma: float, rng: RngStream) -> np.ndarray:
    """``d`` i.i.d. ``N(0, sigma^2)`` coordinates drawn from ``rng``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if sigma < 0 or not math.isfinite(sigma):
        raise ValueError("sigma must be finite and >= 0")
    if sigma == 0:
        return np.zeros(d)
    return sigma * rng.standard_normal(d)


def chernoff_bound(mu: float, gamma_tilde: float) -> float:
    """``exp(-mu g^2 / (2 + g))``: bound on ``P[X > (1 + g) mu]`` for Bernoulli sums."""
    if mu < 0 or not math.isfinite(mu):
        raise ValueError("mu must be finite and >= 0")
    _positive(gamma_tilde=gamma_tilde)
    return math.exp(-mu * gamma_tilde**2 / (2.0 + gamma_tilde))
