"""One-pair-per-step SGD/OGD for pairwise learning, phased localized SGD and its private variants."""

__version__ = "0.1.0"

from .data import Dataset, Example, load_builtin, load_libsvm, parse_libsvm, standard_pipeline
from .eval import auc_score, benchmark, convergence_experiment, cross_validate
from .localization import (DPConfig, dp_localized_sgd_nonsmooth, dp_localized_sgd_smooth,
                           localized_sgd, plan_phases)
from .losses import (HingeAUC, LogisticAUC, LogitSquareAUC, MEEWindow, ProxRegularized, SquareAUC,
                     empirical_risk, empirical_risk_grad, make_loss)
from .optimizer import (PL, Constant, PhaseProx, ProjectionBall, StronglyConvex, erm_solve,
                        ogd_pairwise, sgd_pairwise)
from .rng import RngStream, derive_seed
from .stability import coupled_run, make_neighbor, mean_stability_estimate, per_path_bound_smooth
