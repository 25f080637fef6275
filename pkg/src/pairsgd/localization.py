"""Phased (localized) SGD and its two differentially private variants.

Each phase works on a fresh, disjoint chunk ``S_k`` of size ``n_k = floor(n / 2^k)``
with a geometrically shrinking step parameter, starting from the previous
phase's output.  The private variants release each phase output through the
Gaussian mechanism; noise is added once per phase, never inside the SGD loop.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .losses import ProxRegularized
from .optimizer import Constant, PhaseProx, ProjectionBall, sgd_pairwise
from .privacy import gaussian_vector, noise_scale_nonsmooth, noise_scale_smooth
from .rng import INDEX, NOISE, SHUFFLE, RngStream

VARIANTS = ("smooth", "localized", "nonsmooth")

C_D = 8   # localized: T_k = C_D * n_k
C_E = 4   # nonsmooth DP: T_k = ceil(C_E * n_k^2 * log(1/delta))


@dataclass(frozen=True)
class DPConfig:
    epsilon: float
    delta: float
    lipschitz_G: float
    diameter_D: float
    dimension: int

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not (self.lipschitz_G > 0 and self.diameter_D > 0):
            raise ValueError("G and D must be positive")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")


@dataclass(frozen=True)
class PhasePlan:
    variant: str
    n: int
    raw_K: int
    sizes: tuple
    step_params: tuple      # eta_k (smooth) or zeta_k (localized / nonsmooth)
    budgets: tuple          # T_k
    sigmas: tuple | None    # sigma_k for the private variants
    base_param: float
    discarded: int
    constants: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return len(self.sizes)

    def as_dict(self) -> dict:
        return {
            "variant": self.variant, "n": self.n, "raw_K": self.raw_K, "K": self.K,
            "n_k": list(self.sizes), "step_k": list(self.step_params), "T_k": list(self.budgets),
            "sigma_k": None if self.sigmas is None else list(self.sigmas),
            "base_param": self.base_param, "discarded": self.discarded, **self.constants,
        }


def plan_phases(n: int, variant: str, base_param: float, dp: DPConfig | None = None,
                c_D: float = C_D, c_E: float = C_E) -> PhasePlan:
    """Phase sizes, per-phase step parameter, iteration budget and noise scale.

    ``K = ceil(log2 n)``, ``n_k = floor(2^-k n)``; trailing phases with
    ``n_k < 2`` are dropped and leftover examples are discarded.
    """
    if n < 4:
        raise ValueError(f"phased algorithms need n >= 4, got {n}")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if not base_param > 0:
        raise ValueError("base step parameter must be positive")
    if variant != "localized" and dp is None:
        raise ValueError(f"variant {variant!r} needs a DPConfig")
    raw_K = math.ceil(math.log2(n))
    sizes = [n >> k for k in range(1, raw_K + 1)]
    while sizes and sizes[-1] < 2:
        sizes.pop()
    ks = range(1, len(sizes) + 1)
    sigmas = None
    if variant == "smooth":
        steps = [base_param / 4**k for k in ks]
        budgets = [math.ceil(nk * math.log(4.0 / dp.delta)) for nk in sizes]
        sigmas = [noise_scale_smooth(dp.lipschitz_G, e, dp.delta, dp.epsilon) for e in steps]
        consts = {}
    elif variant == "localized":
        steps = [base_param / 2**k for k in ks]
        budgets = [int(math.ceil(c_D * nk)) for nk in sizes]
        consts = {"c_D": c_D}
    else:
        steps = [base_param / 4**k for k in ks]
        budgets = [math.ceil(c_E * nk * nk * math.log(1.0 / dp.delta)) for nk in sizes]
        sigmas = [noise_scale_nonsmooth(dp.lipschitz_G, z, dp.delta, dp.epsilon) for z in steps]
        consts = {"c_E": c_E}
    return PhasePlan(variant, n, raw_K, tuple(sizes), tuple(steps), tuple(budgets),
                     None if sigmas is None else tuple(sigmas), float(base_param),
                     n - sum(sizes), consts)


def partition(n: int, plan: PhasePlan, seed) -> list:
    """Disjoint index blocks for the phases after a seeded shuffle."""
    perm = RngStream(seed, SHUFFLE).child("phases").permutation(n)
    bounds = np.cumsum((0,) + plan.sizes)
    return [np.sort(perm[bounds[k]:bounds[k + 1]]) for k in range(plan.K)]


def eta_smooth_default(dp: DPConfig, n: int) -> float:
    """``(D/G) min{log(4/d)/sqrt(n), eps / (12 log(4/d) sqrt(2 dim log(2.5/d)))}``."""
    l4 = math.log(4.0 / dp.delta)
    return (dp.diameter_D / dp.lipschitz_G) * min(
        l4 / math.sqrt(n),
        dp.epsilon / (12.0 * l4 * math.sqrt(2.0 * dp.dimension * math.log(2.5 / dp.delta))))


def zeta_nonsmooth_default(dp: DPConfig, n: int) -> float:
    """``(D/G) min{4/sqrt(n), eps / (4 sqrt(dim log(1/d)))}``."""
    return (dp.diameter_D / dp.lipschitz_G) * min(
        4.0 / math.sqrt(n),
        dp.epsilon / (4.0 * math.sqrt(dp.dimension * math.log(1.0 / dp.delta))))


def zeta_localized_default(G: float, D: float, n: int) -> float:
    """``D / (G sqrt(n))``."""
    return D / (G * math.sqrt(n))


def phase_objective(loss, zeta_k: float, n_k: int, anchor) -> ProxRegularized:
    """Pairwise risk on the phase chunk plus ``||w - anchor||^2 / (zeta_k n_k)``."""
    return ProxRegularized(loss, 1.0 / (zeta_k * n_k), anchor)


@dataclass(frozen=True)
class LocalizedResult:
    weights: np.ndarray
    plan: PhasePlan
    phase_outputs: tuple     # w-bar_k before noise
    phase_inits: tuple       # starting point / prox anchor of each phase
    subsets: tuple
    meta: dict = field(default_factory=dict)


def _require_convex(loss):
    if not loss.convex:
        raise ValueError(f"localized algorithms need a convex loss, got {loss.kind!r}")


def localized_sgd(S, loss, ball: ProjectionBall, zeta: float | None = None, seed=0, w0=None,
                  c_D: float = C_D) -> LocalizedResult:
    """Non-private phased SGD on prox-regularised phase objectives; returns ``w-bar_K``."""
    _require_convex(loss)
    n, d = S.X.shape
    G = loss.constants.lipschitz_G
    if zeta is None:
        zeta = zeta_localized_default(G, ball.diameter, n)
    plan = plan_phases(n, "localized", zeta, c_D=c_D)
    subsets = partition(n, plan, seed)
    index = RngStream(seed, INDEX)
    w = np.zeros(d) if w0 is None else ball.project(w0)
    outs, inits = [], []
    for k, (idx, zk, nk, Tk) in enumerate(zip(subsets, plan.step_params, plan.sizes, plan.budgets), 1):
        inits.append(w)
        obj = phase_objective(loss, zk, nk, w)
        res = sgd_pairwise(S.subset(idx), obj, PhaseProx(zk, nk), Tk, ball, avg="index",
                           w0=w, rng=index.child(k))
        w = res.averaged
        outs.append(w)
    meta = {"algorithm": "localized", "zeta": zeta, "G": G, "D": ball.diameter, **plan.as_dict()}
    return LocalizedResult(w, plan, tuple(outs), tuple(inits), tuple(subsets), meta)


def dp_localized_sgd_smooth(S, loss, dp: DPConfig, seed=0, eta: float | None = None, w0=None,
                            noise: bool = True) -> LocalizedResult:
    """Private phased SGD for smooth convex losses (constant step per phase).

    ``eta`` defaults to the utility-optimal setting and is clipped to ``2/L``
    when it exceeds it (recorded as ``eta_clipped`` in ``meta``).
    """
    _require_convex(loss)
    L = loss.constants.smoothness_L
    if L is None:
        raise ValueError("dp_localized_sgd_smooth needs a smooth loss")
    n, d = S.X.shape
    if d != dp.dimension:
        raise ValueError(f"DPConfig dimension {dp.dimension} != data dimension {d}")
    ball = ProjectionBall.from_diameter(dp.diameter_D)
    eta_req = eta_smooth_default(dp, n) if eta is None else float(eta)
    clipped = eta_req > 2.0 / L
    if clipped:
        warnings.warn(f"eta={eta_req:.4g} exceeds 2/L={2.0 / L:.4g}; clipping", stacklevel=2)
    eta_used = min(eta_req, 2.0 / L)
    plan = plan_phases(n, "smooth", eta_used, dp)
    subsets = partition(n, plan, seed)
    index, noise_rng = RngStream(seed, INDEX), RngStream(seed, NOISE)
    w = np.zeros(d) if w0 is None else np.asarray(w0, dtype=np.float64)
    outs, inits = [], []
    for k, (idx, ek, Tk, sk) in enumerate(zip(subsets, plan.step_params, plan.budgets, plan.sigmas), 1):
        inits.append(w)
        res = sgd_pairwise(S.subset(idx), loss, Constant(ek), Tk, ball, avg="eta", w0=w,
                           rng=index.child(k))
        outs.append(res.averaged)
        u = gaussian_vector(d, sk, noise_rng)
        w = res.averaged + u if noise else res.averaged
    meta = {"algorithm": "dp-smooth", "epsilon": dp.epsilon, "delta": dp.delta,
            "G": dp.lipschitz_G, "D": dp.diameter_D, "L": L, "eta_requested": eta_req,
            "eta": eta_used, "eta_clipped": clipped, "noise": noise, **plan.as_dict()}
    return LocalizedResult(w, plan, tuple(outs), tuple(inits), tuple(subsets), meta)


def dp_localized_sgd_nonsmooth(S, loss, dp: DPConfig, seed=0, zeta: float | None = None,
                               w0=None, c_E: float = C_E, noise: bool = True) -> LocalizedResult:
    """Private phased SGD for convex, possibly nonsmooth losses (prox phase objectives)."""
    _require_convex(loss)
    n, d = S.X.shape
    if d != dp.dimension:
        raise ValueError(f"DPConfig dimension {dp.dimension} != data dimension {d}")
    ball = ProjectionBall.from_diameter(dp.diameter_D)
    if zeta is None:
        zeta = zeta_nonsmooth_default(dp, n)
    plan = plan_phases(n, "nonsmooth", zeta, dp, c_E=c_E)
    subsets = partition(n, plan, seed)
    index, noise_rng = RngStream(seed, INDEX), RngStream(seed, NOISE)
    w = np.zeros(d) if w0 is None else np.asarray(w0, dtype=np.float64)
    outs, inits = [], []
    for k, (idx, zk, nk, Tk, sk) in enumerate(
            zip(subsets, plan.step_params, plan.sizes, plan.budgets, plan.sigmas), 1):
        inits.append(w)
        obj = phase_objective(loss, zk, nk, w)
        res = sgd_pairwise(S.subset(idx), obj, PhaseProx(zk, nk), Tk, ball, avg="index",
                           w0=w, rng=index.child(k))
        outs.append(res.averaged)
        u = gaussian_vector(d, sk, noise_rng)
        w = res.averaged + u if noise else res.averaged
    meta = {"algorithm": "dp-nonsmooth", "epsilon": dp.epsilon, "delta": dp.delta,
            "G": dp.lipschitz_G, "D": dp.diameter_D, "zeta": zeta, "noise": noise,
            **plan.as_dict()}
    return LocalizedResult(w, plan, tuple(outs), tuple(inits), tuple(subsets), meta)
