"""Name-addressable problem construction for the CLI and scan workers.

Builders take a plain parameter mapping (from flags or a JSON config) so
that worker processes can reconstruct families without pickling closures.
"""

from __future__ import annotations

from ..errors import InvalidInputError
from ..model import ParametricProblem
from .curves import cuspidal_cubic, twisted_cubic, twisted_cubic_bad
from .edm import edm_1d, quadrilateral_missing_01
from .graphs import GraphSpec, path, triangle
from .sos import sos_quartic, sos_sextic
from .sync import procrustes, rotation_sync, se_sync
from .tensors import rank_one_approximation


def _graph_from_params(params: dict, default: GraphSpec | None = None) -> GraphSpec:
    if "edges" in params:
        edges = tuple((int(i), int(j)) for i, j in params["edges"])
        n_vertices = int(params.get("n_vertices", max(max(e) for e in edges) + 1))
        return GraphSpec(n_vertices, edges)
    if default is not None:
        return default
    raise InvalidInputError("graph parameters missing: provide 'edges'")


def _build_twisted(params):
    return twisted_cubic()


def _build_twisted_bad(params):
    return twisted_cubic_bad()


def _build_cuspidal(params):
    return cuspidal_cubic()


def _build_rank_one(params):
    shape = tuple(int(s) for s in params.get("shape", (2, 2)))
    return rank_one_approximation(shape)


def _build_rotation_sync(params):
    g = _graph_from_params(params, triangle())
    return rotation_sync(g, int(params.get("d", 2)))


def _build_se_sync(params):
    g = _graph_from_params(params, path(2))
    return se_sync(g, int(params.get("d", 2)))


def _build_procrustes(params):
    return procrustes(int(params.get("m1", 3)), int(params.get("n", 3)),
                      int(params.get("k", 2)), int(params.get("m2", 3)))


def _build_edm(params):
    g = _graph_from_params(params, quadrilateral_missing_01())
    return edm_1d(g)


def _build_sos_sextic(params):
    return sos_sextic()


def _build_sos_quartic(params):
    return sos_quartic()


REGISTRY = {
    "twisted-cubic": _build_twisted,
    "twisted-cubic-bad": _build_twisted_bad,
    "cuspidal-cubic": _build_cuspidal,
    "rank-one": _build_rank_one,
    "rotation-sync": _build_rotation_sync,
    "se-sync": _build_se_sync,
    "procrustes": _build_procrustes,
    "edm-1d": _build_edm,
    "sos-sextic": _build_sos_sextic,
    "sos-quartic": _build_sos_quartic,
}

DESCRIPTIONS = {
    "twisted-cubic": "nearest point to the curve (t, t^2, t^3) in R^3",
    "twisted-cubic-bad": "same target with a formulation whose dual value is always 0",
    "cuspidal-cubic": "nearest point to y2^2 = y1^3, lifted with one auxiliary variable",
    "rank-one": "nearest rank-one tensor; params: shape=[n1,n2,...]",
    "rotation-sync": "orthogonal-group synchronization; params: edges, d",
    "se-sync": "rigid-motion synchronization; params: edges, d",
    "procrustes": "weighted orthogonal Procrustes; params: m1, n, k, m2",
    "edm-1d": "1-D Euclidean distance matrix completion; params: edges",
    "sos-sextic": "z1^4 z2^2 + z1^2 z2^4 + theta z1^2 z2^2 via the Gram QCQP",
    "sos-quartic": "z^4 - theta z via the Gram QCQP",
}


def build_problem(name: str, params: dict | None = None) -> ParametricProblem:
    if name not in REGISTRY:
        raise InvalidInputError(
            f"unknown problem '{name}'; available: {', '.join(sorted(REGISTRY))}")
    return REGISTRY[name](params or {})


def list_problems() -> list[tuple[str, str]]:
    return [(name, DESCRIPTIONS[name]) for name in sorted(REGISTRY)]
