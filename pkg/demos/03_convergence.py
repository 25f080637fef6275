"""
Optimization rates on a synthetic problem
=========================================

The suboptimality of the averaged iterate is recorded at powers of two and a
line is fitted to the last decade on log-log axes.  Convex problems with a
``1/sqrt(T)`` step decay like ``T^(-1/2)``; strongly convex ones with
``eta_j = 2/(alpha (j+1))`` decay like ``1/T``.
"""

import math

import numpy as np

from pairsgd.eval import convergence_experiment
from pairsgd.losses import HingeAUC, ProxRegularized, SquareAUC
from pairsgd.optimizer import PL, Constant, ProjectionBall, StronglyConvex
from pairsgd.synthetic import gaussian_classes, pl_instance

ds = gaussian_classes(200, 5, seed=1)
T = 2**13

curve = convergence_experiment(ds, HingeAUC(1.0), Constant(0.3 / math.sqrt(T)), T, runs=3)
print(f"convex hinge:        slope {curve.slope:+.2f}")

# %%
# An explicit ridge term makes the square loss strongly convex.
reg = ProxRegularized(SquareAUC(1.0), 0.05, np.zeros(ds.d))
alpha = reg.constants.strong_convexity_alpha
curve = convergence_experiment(ds, reg, StronglyConvex(alpha), T, ball=ProjectionBall(1.0),
                               avg="index", runs=3)
print(f"strongly convex:     slope {curve.slope:+.2f}")
for t, gap in zip(curve.t[-4:], curve.gap[-4:]):
    print(f"   t={t:5d}  gap={gap:.3e}")

# %%
# A nonconvex logit-square loss whose minimiser is interior satisfies a local
# PL condition; the last iterate is tracked against a best-of-many reference.
inst = pl_instance()
curve = convergence_experiment(inst.data, inst.loss, PL(inst.mu), T, ball=inst.ball,
                               avg="last", runs=5)
print(f"PL (mu={inst.mu:.4f}): slope {curve.slope:+.2f}")
