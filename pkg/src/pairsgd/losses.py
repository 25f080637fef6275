"""Pairwise losses ``f(w; z, z')`` and the double-sum empirical risk.

Every loss here depends on the pair only through the margin
``m = w . (x - x')`` (plus the labels), so a loss is a scalar link ``phi(m)``
with derivative ``dphi(m)`` and the gradient is ``dphi(m) * (x - x')``.
AUC losses are gated by ``[y = +1 and y' = -1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class RejectedInput(ValueError):
    """Non-finite weights or features."""


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class LossConstants:
    """Regularity constants on the feasible ball (features with ``||x|| <= 1``).

    ``smoothness_L is None`` marks a nonsmooth loss.
    """

    lipschitz_G: float
    smoothness_L: float | None = None
    strong_convexity_alpha: float = 0.0
    pl_mu: float | None = None
    value_bound_B: float | None = None
    grad_moment_alpha0: float | None = None

    def __post_init__(self):
        if self.lipschitz_G < 0 or self.strong_convexity_alpha < 0:
            raise ValueError("constants must be non-negative")
        if (self.strong_convexity_alpha > 0 and self.smoothness_L is not None
                and self.smoothness_L < self.strong_convexity_alpha):
            raise ValueError("smoothness_L must be >= strong_convexity_alpha")


def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


class PairwiseLoss:
    """Base class.  Subclasses set ``kind``, ``gated``, ``convex`` and the links."""

    kind = "abstract"
    gated = True      # vanishes unless (y, y') = (+1, -1)
    convex = True

    def __init__(self, radius: float = 1.0):
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.constants = self._constants()

    def __repr__(self):
        return f"{type(self).__name__}(radius={self.radius:g})"

    def _constants(self) -> LossConstants:
        raise NotImplementedError

    @property
    def smooth(self) -> bool:
        return self.constants.smoothness_L is not None

    def params(self) -> dict:
        return {"kind": self.kind, "radius": self.radius}

    # scalar links; y, yp are the two labels
    def phi(self, m: float, y, yp) -> float:
        raise NotImplementedError

    def dphi(self, m: float, y, yp) -> float:
        raise NotImplementedError

    # vectorised links over arrays of margins / labels
    def phi_vec(self, m, y, yp):
        raise NotImplementedError

    def dphi_vec(self, m, y, yp):
        raise NotImplementedError

    def active(self, y, yp) -> bool:
        return (not self.gated) or (y == 1 and yp == -1)

    # public point evaluations ----------------------------------------

    def value(self, w, x, y, xp, yp) -> float:
        w, x, xp = _check(w, x, xp)
        if not self.active(y, yp):
            return 0.0
        return float(self.phi(float(w @ (x - xp)), y, yp))

    def grad(self, w, x, y, xp, yp) -> np.ndarray:
        w, x, xp = _check(w, x, xp)
        if not self.active(y, yp):
            return np.zeros_like(w)
        diff = x - xp
        return self.dphi(float(w @ diff), y, yp) * diff


def _check(w, *xs):
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise RejectedInput("non-finite weight")
    out = [w]
    for x in xs:
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise RejectedInput("non-finite feature")
        out.append(x)
    return out


class HingeAUC(PairwiseLoss):
    """``(1 - m)_+``; the subgradient at ``m = 1`` is taken as 0."""

    kind = "hinge"

    def _constants(self):
        r = self.radius
        return LossConstants(lipschitz_G=2.0, value_bound_B=1.0 + 2.0 * r)

    def phi(self, m, y, yp):
        return 1.0 - m if m < 1.0 else 0.0

    def dphi(self, m, y, yp):
        return -1.0 if m < 1.0 else 0.0

    def phi_vec(self, m, y, yp):
        return np.maximum(1.0 - m, 0.0)

    def dphi_vec(self, m, y, yp):
        return np.where(m < 1.0, -1.0, 0.0)


class SquareAUC(PairwiseLoss):
    """``(1 - m)^2``."""

    kind = "square"

    def _constants(self):
        r = self.radius
        # |dphi| <= 2(1 + 2r) and ||x - x'|| <= 2
        return LossConstants(lipschitz_G=4.0 * (1.0 + 2.0 * r), smoothness_L=8.0,
                             value_bound_B=(1.0 + 2.0 * r) * (1.0 + 2.0 * r))

    def phi(self, m, y, yp):
        return (1.0 - m) ** 2

    def dphi(self, m, y, yp):
        return -2.0 * (1.0 - m)

    def phi_vec(self, m, y, yp):
        return (1.0 - m) ** 2

    def dphi_vec(self, m, y, yp):
        return -2.0 * (1.0 - m)


# sup |g'| and sup |g''| for g(t) = (1 - sigmoid(t))^2
_LOGIT_SQ_D1 = 8.0 / 27.0
_LOGIT_SQ_D2 = None


def _logit_sq_d2_bound() -> float:
    global _LOGIT_SQ_D2
    if _LOGIT_SQ_D2 is None:
        t = np.linspace(-12, 12, 200001)
        s = 1.0 / (1.0 + np.exp(-t))
        # g'' = -2 s (1 - s)^2 (1 - 3 s)
        _LOGIT_SQ_D2 = float(np.max(np.abs(2 * s * (1 - s) ** 2 * (1 - 3 * s)))) * 1.0001
    return _LOGIT_SQ_D2


class LogitSquareAUC(PairwiseLoss):
    """``(1 - sigmoid(m))^2``: nonconvex, smooth."""

    kind = "logit-square"
    convex = False

    def _constants(self):
        return LossConstants(lipschitz_G=2.0 * _LOGIT_SQ_D1,
                             smoothness_L=4.0 * _logit_sq_d2_bound(), value_bound_B=1.0)

    def phi(self, m, y, yp):
        return (1.0 - _sigmoid(m)) ** 2

    def dphi(self, m, y, yp):
        s = _sigmoid(m)
        return -2.0 * s * (1.0 - s) ** 2

    def phi_vec(self, m, y, yp):
        s = _sigmoid_vec(m)
        return (1.0 - s) ** 2

    def dphi_vec(self, m, y, yp):
        s = _sigmoid_vec(m)
        return -2.0 * s * (1.0 - s) ** 2


def _sigmoid_vec(m):
    m = np.asarray(m, dtype=np.float64)
    return np.where(m >= 0, 1.0 / (1.0 + np.exp(-np.abs(m))),
                    np.exp(-np.abs(m)) / (1.0 + np.exp(-np.abs(m))))


class LogisticAUC(PairwiseLoss):
    """``log(1 + exp(-m))``: convex and smooth; used by the private experiments."""

    kind = "logistic"

    def _constants(self):
        r = self.radius
        return LossConstants(lipschitz_G=2.0, smoothness_L=1.0,
                             value_bound_B=float(np.logaddexp(0.0, 2.0 * r)))

    def phi(self, m, y, yp):
        return math.log1p(math.exp(-m)) if m > -30 else -m

    def dphi(self, m, y, yp):
        return -_sigmoid(-m)

    def phi_vec(self, m, y, yp):
        return np.logaddexp(0.0, -np.asarray(m, dtype=np.float64))

    def dphi_vec(self, m, y, yp):
        return -_sigmoid_vec(-np.asarray(m, dtype=np.float64))


class MEEWindow(PairwiseLoss):
    """Minimum-error-entropy window ``1 - exp(-(e - e')^2 / (2 gamma^2))``.

    ``e = y - w.x`` so ``e - e' = (y - y') - m``.  Not gated, not convex.
    """

    kind = "mee"
    gated = False
    convex = False

    def __init__(self, radius: float = 1.0, gamma: float = 1.0):
        if not gamma > 0:
            raise ValueError("window width gamma must be positive")
        self.gamma = float(gamma)
        super().__init__(radius)

    def __repr__(self):
        return f"MEEWindow(radius={self.radius:g}, gamma={self.gamma:g})"

    def params(self):
        return {**super().params(), "gamma": self.gamma}

    def _constants(self):
        g = self.gamma
        return LossConstants(lipschitz_G=2.0 * math.exp(-0.5) / g,
                             smoothness_L=4.0 / g**2, value_bound_B=1.0)

    def phi(self, m, y, yp):
        s = (y - yp) - m
        return -math.expm1(-s * s / (2 * self.gamma**2))

    def dphi(self, m, y, yp):
        s = (y - yp) - m
        return -(s / self.gamma**2) * math.exp(-s * s / (2 * self.gamma**2))

    def phi_vec(self, m, y, yp):
        s = (np.asarray(y) - np.asarray(yp)) - m
        return -np.expm1(-s * s / (2 * self.gamma**2))

    def dphi_vec(self, m, y, yp):
        s = (np.asarray(y) - np.asarray(yp)) - m
        return -(s / self.gamma**2) * np.exp(-s * s / (2 * self.gamma**2))


class ProxRegularized:
    """``base(w) + coef * ||w - anchor||^2`` with modulus ``2 coef`` added to alpha."""

    def __init__(self, base: PairwiseLoss, coef: float, anchor):
        if coef < 0:
            raise ValueError("coef must be non-negative")
        self.base = base
        self.coef = float(coef)
        self.anchor = np.array(anchor, dtype=np.float64)
        self.anchor.setflags(write=False)
        c = base.constants
        diameter = 2.0 * base.radius
        L = None if c.smoothness_L is None else c.smoothness_L + 2.0 * self.coef
        self.constants = replace(
            c,
            lipschitz_G=c.lipschitz_G + 2.0 * self.coef * (base.radius + float(np.linalg.norm(self.anchor))),
            smoothness_L=L,
            strong_convexity_alpha=c.strong_convexity_alpha + 2.0 * self.coef,
            value_bound_B=None if c.value_bound_B is None else c.value_bound_B + self.coef * diameter**2,
        )

    def __getattr__(self, name):
        return getattr(self.base, name)

    def __repr__(self):
        return f"ProxRegularized({self.base!r}, coef={self.coef:g})"

    @property
    def smooth(self):
        return self.constants.smoothness_L is not None

    def params(self):
        return {**self.base.params(), "prox_coef": self.coef}

    def value(self, w, x, y, xp, yp):
        w = np.asarray(w, dtype=np.float64)
        return self.base.value(w, x, y, xp, yp) + self.coef * float(np.sum((w - self.anchor) ** 2))

    def grad(self, w, x, y, xp, yp):
        w = np.asarray(w, dtype=np.float64)
        return self.base.grad(w, x, y, xp, yp) + 2.0 * self.coef * (w - self.anchor)


LOSSES = {
    "hinge": HingeAUC,
    "square": SquareAUC,
    "logit-square": LogitSquareAUC,
    "logistic": LogisticAUC,
    "mee": MEEWindow,
}


def make_loss(kind: str, radius: float = 1.0, **params) -> PairwiseLoss:
    try:
        cls = LOSSES[kind]
    except KeyError:
        raise ValueError(f"unknown loss {kind!r}; choose from {sorted(LOSSES)}") from None
    return cls(radius=radius, **params)


def loss_value(loss, w, z, zp) -> float:
    """``f(w; z, z')`` for ``z = (x, y)`` tuples or :class:`~pairsgd.data.Example`."""
    (x, y), (xp, yp) = _unpack(z, len(w)), _unpack(zp, len(w))
    return loss.value(w, x, y, xp, yp)


def loss_grad(loss, w, z, zp) -> np.ndarray:
    (x, y), (xp, yp) = _unpack(z, len(w)), _unpack(zp, len(w))
    return loss.grad(w, x, y, xp, yp)


def _unpack(z, d):
    if hasattr(z, "indices"):
        return z.dense(d), z.label
    x, y = z
    return np.asarray(x, dtype=np.float64), y


# ------------------------------------------------------------ empirical risk


def _base_and_prox(loss):
    if isinstance(loss, ProxRegularized):
        return loss.base, loss.coef, loss.anchor
    return loss, 0.0, None


def _pair_blocks(loss, w, X, y, chunk):
    """Yield (rows, dphi-or-phi inputs) over row chunks of the n x n pair grid."""
    n = len(y)
    scores = X @ w
    for start in range(0, n, chunk):
        rows = slice(start, min(start + chunk, n))
        m = scores[rows, None] - scores[None, :]
        mask = np.ones(m.shape, dtype=bool)
        idx = np.arange(rows.start, rows.stop)
        mask[idx - start, idx] = False
        yi = y[rows, None]
        yj = y[None, :]
        if loss.gated:
            mask &= (yi == 1) & (yj == -1)
        yield rows, m, mask, yi, yj


def empirical_risk(loss, w, S, chunk: int = 512) -> float:
    """``1/(n(n-1)) * sum_{i != j} f(w; z_i, z_j)`` over ordered pairs."""
    X, y = S.X, S.y
    n = len(y)
    if n < 2:
        raise InsufficientData("empirical risk needs at least two examples")
    w, = _check(w)
    base, coef, anchor = _base_and_prox(loss)
    total = 0.0
    for _, m, mask, yi, yj in _pair_blocks(base, w, X, y, chunk):
        vals = base.phi_vec(m, yi, yj)
        total += float(np.sum(vals, where=mask))
    risk = total / (n * (n - 1))
    if coef:
        risk += coef * float(np.sum((w - anchor) ** 2))
    return risk


def empirical_risk_grad(loss, w, S, chunk: int = 512) -> np.ndarray:
    X, y = S.X, S.y
    n = len(y)
    if n < 2:
        raise InsufficientData("empirical risk needs at least two examples")
    w, = _check(w)
    base, coef, anchor = _base_and_prox(loss)
    row_coef = np.zeros(n)
    col_coef = np.zeros(n)
    for rows, m, mask, yi, yj in _pair_blocks(base, w, X, y, chunk):
        c = np.where(mask, base.dphi_vec(m, yi, yj), 0.0)
        row_coef[rows] += c.sum(axis=1)
        col_coef += c.sum(axis=0)
    g = X.T @ (row_coef - col_coef) / (n * (n - 1))
    if coef:
        g = g + 2.0 * coef * (w - anchor)
    return g
