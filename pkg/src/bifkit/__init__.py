"""Numerical continuation of equilibrium and cycle bifurcations with
center-manifold branch switching at codimension-two points."""

from . import errors
from .tensors import OdeModel, DerivativeBundle, bundle_at, eval_rhs, apply_multilinear
from .continuation import (
    Branch,
    ContinuationProblem,
    StepControl,
    continue_branch,
    detect_and_locate,
    init_point,
)
from .equilibria import (
    Codim1Point,
    Codim2Point,
    classify_codim2,
    equilibrium_system,
    fold_system,
    hopf_system,
    solve_equilibrium,
)
from .switching import (
    CyclePredictor,
    GhReduction,
    HhReduction,
    PredictorSample,
    ZhReduction,
    predict_gh_lpc,
    predict_hh_ns,
    predict_zh_ns,
    predictor_tangent,
    reduce_gh,
    reduce_hh,
    reduce_zh,
)
from .collocation import CollocationCycle, CycleSpace, equidistant_to_collocation
from .cycles import (
    correct_cycle,
    first_step_diagnostics,
    floquet_multipliers,
    integrate_monodromy,
    lpc_problem,
    ns_problem,
)
from .linalg import EigenData, BorderedOperator, eig_with_adjoint, solve_bordered, fredholm_gamma
from .normalform import (
    CenterBasis,
    CenterExpansion,
    GhNormalForm,
    ZhNormalForm,
    HhNormalForm,
    critical_gh,
    critical_zh,
    critical_hh,
    expand_center_manifold,
)

__all__ = [
    "errors",
    "OdeModel", "DerivativeBundle", "bundle_at", "eval_rhs", "apply_multilinear",
    "EigenData", "BorderedOperator", "eig_with_adjoint", "solve_bordered", "fredholm_gamma",
    "CenterBasis", "CenterExpansion", "GhNormalForm", "ZhNormalForm", "HhNormalForm",
    "critical_gh", "critical_zh", "critical_hh", "expand_center_manifold",
    "Branch", "ContinuationProblem", "StepControl", "continue_branch",
    "detect_and_locate", "init_point",
    "Codim1Point", "Codim2Point", "classify_codim2", "equilibrium_system",
    "fold_system", "hopf_system", "solve_equilibrium",
    "CyclePredictor", "GhReduction", "HhReduction", "ZhReduction", "PredictorSample",
    "predict_gh_lpc", "predict_hh_ns", "predict_zh_ns", "predictor_tangent",
    "reduce_gh", "reduce_hh", "reduce_zh",
    "CollocationCycle", "CycleSpace", "equidistant_to_collocation",
    "correct_cycle", "first_step_diagnostics", "floquet_multipliers",
    "integrate_monodromy", "lpc_problem", "ns_problem",
]

__version__ = "0.1.0"
