"""
AUC maximization with one pair per step
=======================================

Pairwise SGD draws a fresh index ``i_t`` each step and pairs it with the
previous one, so every update touches exactly two examples.  Here we fit a
linear scorer on the diabetes data with the hinge surrogate and compare it
with the online variant, which sees each example once.
"""

import numpy as np

from pairsgd.data import load_builtin, split, standard_pipeline
from pairsgd.eval import auc_score
from pairsgd.losses import HingeAUC
from pairsgd.optimizer import Constant, ProjectionBall, ogd_pairwise, sgd_pairwise

ds = standard_pipeline(load_builtin("diabetes"))
train, test = split(ds, 0.8, seed=0)
print(f"{train.n} training rows, {test.n} test rows, d = {ds.d}")

# %%
# Features sit in the unit ball, so a ball of radius 5 for ``w`` is roomy.
ball = ProjectionBall(5.0)
loss = HingeAUC(ball.radius)

res = sgd_pairwise(train, loss, Constant(0.1), T=5 * train.n, ball=ball, seed=0)
print("SGD   test AUC:", round(auc_score(test.X @ res.averaged, test.y), 4))

# %%
# The online variant walks the data once in a shuffled order.
order = np.random.default_rng(0).permutation(train.n)
ogd = ogd_pairwise(train.subset(order), loss, Constant(0.1), ball)
print("OGD   test AUC:", round(auc_score(test.X @ ogd.averaged, test.y), 4))

# %%
# The last iterate is usually a little noisier than the step-weighted mean.
print("SGD last-iterate AUC:", round(auc_score(test.X @ res.last, test.y), 4))
