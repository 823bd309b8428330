"""Solvers and experiment harness for low-rank plus sparse matrix
decomposition (robust PCA / stable principal component pursuit)."""

from .dualsmooth import (
    CompositeModel,
    dual_gradient,
    dual_objective,
    fista_dual,
    proximal_point,
)
from .gauges import GaugeSpec, PenaltySpec, gauge_eval, gauge_polar, value_fn_derivative
from .handles import (
    L1BallIndicator,
    L1Norm,
    L2BallIndicator,
    LinfBallIndicator,
    NuclearNorm,
    PairSumGauge,
    ProxHandle,
    SquaredL2,
    ZeroFunction,
    ZeroSetIndicator,
)
from .levelset import LevelSetError, solve_levelset
from .linalg import (
    SvdFactors,
    frobenius_norm,
    nuclear_norm,
    spectral_norm,
    svd_full,
    svd_randomized,
)
from .matio import load_matrix, save_matrix
from .metrics import (
    default_lambda_sum,
    derive_parameters,
    epsilon_from_spectrum,
    relative_pair_error,
    span_projection_error,
)
from .models import default_mu, rpca_model, rpca_parts
from .operators import (
    LinearOp,
    op_compose,
    op_identity,
    op_restrict,
    op_scale,
    op_stack,
    op_sum_identity,
    pair_to_vec,
    vec_to_pair,
)
from .pdhg import solve_pdhg
from .prox import (
    moreau_conjugate_prox,
    proj_l1_ball,
    proj_l1_ball_nonneg,
    proj_max_gauge,
    proj_nuclear_ball,
    proj_sum_gauge,
    proj_weighted_l1_ball,
    reflected_prox,
    soft_threshold,
    soft_threshold_nonneg,
    svt,
)
from .subsolvers import FlipProblem, IterState, LagProblem, solve_flip_qn, solve_flip_spg
from .synth import synth_exponential, synth_lowrank_sparse
from .trace import SolveTrace

__version__ = "0.1.0"
