"""Problem zoo: parametric QCQP families with ground-truth samplers."""

from .curves import (
    cuspidal_cubic,
    cuspidal_cubic_nearest,
    cuspidal_cubic_point,
    cuspidal_null_multipliers,
    twisted_cubic,
    twisted_cubic_bad,
    twisted_cubic_nearest,
    twisted_cubic_point,
)
from .edm import (
    cm_null_multipliers,
    edm_1d,
    quadrilateral_missing_01,
    sample_generic_points,
    truth_from_points,
)
from .graphs import GraphSpec, path, triangle
from .registry import build_problem, list_problems
from .sos import (
    MonomialBasis,
    gram_eval,
    gram_lift,
    poly_exponents,
    poly_vector,
    sos_quartic,
    sos_sextic,
    sos_unconstrained,
    veronese_constraints,
)
from .sync import procrustes, rotation_sync, se_sync
from .tensors import best_rank_one_matrix, rank_one_approximation

__all__ = [
    "GraphSpec",
    "MonomialBasis",
    "best_rank_one_matrix",
    "build_problem",
    "cm_null_multipliers",
    "cuspidal_cubic",
    "cuspidal_cubic_nearest",
    "cuspidal_cubic_point",
    "cuspidal_null_multipliers",
    "edm_1d",
    "gram_eval",
    "gram_lift",
    "list_problems",
    "path",
    "poly_exponents",
    "poly_vector",
    "procrustes",
    "quadrilateral_missing_01",
    "rank_one_approximation",
    "rotation_sync",
    "sample_generic_points",
    "se_sync",
    "sos_quartic",
    "sos_sextic",
    "sos_unconstrained",
    "veronese_constraints",
    "triangle",
    "truth_from_points",
    "twisted_cubic",
    "twisted_cubic_bad",
    "twisted_cubic_nearest",
    "twisted_cubic_point",
]
