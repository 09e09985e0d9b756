"""Non-negative matrix factorization under the generalized dual KL divergence."""

__version__ = "0.1.0"

from .divergence import (AlphaParam, DivergenceValue, Regime, dual_divergence_grad,
                         dual_divergence_hess, dual_divergence_scalar, matrix_objective,
                         objective_weight)
from .errors import *  # noqa: F401,F403
from .factorizer import (ConvergenceMode, FactorConfig, FactorResult, init_factors,
                         r_squared, run_multi, run_single)
from .updater import normalize_columns, update_h, update_pair, update_w
