"""Semidefinite relaxations of parametric QCQPs: exactness certificates,
regularity diagnostics, and guaranteed stability radii."""

from .certify import CertifySettings, GapCertificate, certify_gap, certify_instance, check_corank_one
from .errors import FinslerHypothesisError, InvalidInputError
from .linalg import EigDecomposition, pseudo_inverse, svd, sym_eig
from .model import (
    AffineView,
    HomQCQP,
    HomQuadratic,
    ParametricProblem,
    QuadraticForm,
    affine_multiplier,
    homogenize,
    kkt_residuals,
    lagrangian_hessian,
    lift_multiplier,
    problem_from_json,
    problem_to_json,
)
from .sdp import (
    SDPProblem,
    SDPResult,
    SDPSettings,
    build_relaxation,
    dual_multipliers,
    extract_rank_one,
    solve_sdp,
    to_sdpa,
)
from .stability import (
    AcqResult,
    BranchResult,
    PerturbResult,
    SlaterResult,
    StabilityRadius,
    StabilityReport,
    assess_R2,
    branch_point_check,
    check_acq,
    finsler_perturb,
    homogeneous_jacobian,
    multiplier_perturbation,
    operator_norm_M,
    regularity_matrix_check,
    restricted_slater,
    restriction_matrix_A,
    stability_radius,
    stability_report,
)

__version__ = "0.1.0"
