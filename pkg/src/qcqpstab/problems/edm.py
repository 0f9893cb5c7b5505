"""Noisy Euclidean distance matrix completion on a line (p = 1).

Variables are squared distances d_ij for every vertex pair; observed pairs
are tied to the parameters through the least-squares objective, unobserved
ones stay free.  The variety of valid 1-D squared-distance vectors is cut
out by one quadratic per vertex triple, obtained by expanding the bordered
4x4 determinant

    det [[0, d_ij, d_ik, 1], [d_ij, 0, d_jk, 1], [d_ik, d_jk, 0, 1], [1, 1, 1, 0]]
      = d_ij^2 + d_ik^2 + d_jk^2 - 2 d_ij d_ik - 2 d_ij d_jk - 2 d_ik d_jk,

which vanishes exactly when the three points are collinear (it is -16 times
the squared triangle area with those squared side lengths).
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from ..model import AffineView, ParametricProblem, QuadraticForm, homogenize
from .graphs import GraphSpec


def pair_index(n_vertices: int) -> dict[tuple[int, int], int]:
    """Lexicographic index of every vertex pair (i < j)."""
    return {pair: k for k, pair in enumerate(combinations(range(n_vertices), 2))}


def cayley_menger_quadratic(triple, pairs: dict, n_pairs: int) -> QuadraticForm:
    """The collinearity quadratic of one vertex triple over all pair variables."""
    i, j, k = triple
    a, b, c = pairs[(i, j)], pairs[(i, k)], pairs[(j, k)]
    P = np.zeros((n_pairs, n_pairs))
    for p in (a, b, c):
        P[p, p] = 1.0
    for p, q in ((a, b), (a, c), (b, c)):
        P[p, q] -= 1.0
        P[q, p] -= 1.0
    return QuadraticForm(P, np.zeros(n_pairs), 0.0)


def edm_1d(g: GraphSpec) -> ParametricProblem:
    """Distance completion family for graph g; x = (z0, d_pairs lex order)."""
    nv = g.n_vertices
    pairs = pair_index(nv)
    n_pairs = len(pairs)
    observed = [pairs[e] for e in g.edges]
    unobserved = [k for k in range(n_pairs) if k not in set(observed)]
    triples = list(combinations(range(nv), 3))
    cons = tuple(cayley_menger_quadratic(t, pairs, n_pairs) for t in triples)

    def objective(theta):
        theta = np.asarray(theta, dtype=float)
        P = np.zeros((n_pairs, n_pairs))
        q = np.zeros(n_pairs)
        for val, k in zip(theta, observed):
            P[k, k] = 1.0
            q[k] = -2.0 * val
        return QuadraticForm(P, q, float(theta @ theta))

    def instantiate(theta):
        return homogenize(objective(theta), cons)

    def affine_view(theta):
        return AffineView(objective(theta), cons, dim_variety=nv - 1)

    def ground_truth(rng):
        t = sample_generic_points(rng, nv)
        return truth_from_points(g, t)

    return ParametricProblem(
        name="edm-1d",
        d=len(g.edges),
        instantiate=instantiate,
        affine_view=affine_view,
        theta_independent_feasible_set=True,
        ground_truth=ground_truth,
        z_indices=tuple([0] + [1 + k for k in unobserved]),
        oracle=None,
        theta_doc=f"observed squared distances for edges {list(g.edges)}",
    )


def sample_generic_points(rng: np.random.Generator, n_vertices: int,
                          min_sep: float = 1e-3) -> np.ndarray:
    """Anchored 1-D configuration (t_0 = 0) with all pairwise gaps >= min_sep."""
    for _ in range(1000):
        t = np.concatenate([[0.0], rng.uniform(-2.0, 2.0, n_vertices - 1)])
        gaps = np.abs(t[:, None] - t[None, :])[np.triu_indices(n_vertices, 1)]
        if np.min(gaps) >= min_sep:
            return t
    raise RuntimeError("failed to sample a generic configuration")


def truth_from_points(g: GraphSpec, t) -> tuple[np.ndarray, np.ndarray]:
    """(theta_bar, x_bar) for points t on the line: theta over observed edges,
    x_bar = (1, all squared pairwise distances)."""
    t = np.asarray(t, dtype=float).reshape(-1)
    pairs = pair_index(g.n_vertices)
    d_all = np.zeros(len(pairs))
    for (i, j), k in pairs.items():
        d_all[k] = (t[i] - t[j]) ** 2
    theta = np.array([(t[i] - t[j]) ** 2 for i, j in g.edges])
    return theta, np.concatenate([[1.0], d_all])


def quadrilateral_missing_01() -> GraphSpec:
    """Four vertices, every pair observed except (0, 1)."""
    return GraphSpec(4, ((0, 2), (0, 3), (1, 2), (1, 3), (2, 3)))


def cm_null_multipliers(t) -> np.ndarray:
    """The gradient-annihilating combination of the four triple constraints
    for the quadrilateral, in lexicographic triple order (012, 013, 023, 123):

        mu_012 = -t03 t13 t23,  mu_013 = t02 t12 t23,
        mu_023 = -t01 t12 t13,  mu_123 = t01 t02 t03,

    with t_ab = t_b - t_a."""
    t = np.asarray(t, dtype=float).reshape(-1)

    def d(a, b):
        return t[b] - t[a]

    return np.array([
        -d(0, 3) * d(1, 3) * d(2, 3),
        d(0, 2) * d(1, 2) * d(2, 3),
        -d(0, 1) * d(1, 2) * d(1, 3),
        d(0, 1) * d(0, 2) * d(0, 3),
    ])
