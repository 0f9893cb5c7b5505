"""Nearest rank-one tensor (Segre variety) as a QCQP.

The variety of rank-<=1 tensors is cut out by the 2x2 minors of all mode
flattenings; minors repeated across flattenings are deduplicated.
"""

from __future__ import annotations

from itertools import combinations, product

import numpy as np

from ..errors import InvalidInputError
from ..model import AffineView, ParametricProblem, QuadraticForm, homogenize


def _flattening_minors(shape) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """All 2x2 minors of all flattenings as pairs of flat-index pairs:
    ((p, q), (r, s)) meaning y_p y_q - y_r y_s = 0.  Deduplicated."""
    shape = tuple(int(s) for s in shape)
    strides = np.zeros(len(shape), dtype=int)
    acc = 1
    for k in reversed(range(len(shape))):
        strides[k] = acc
        acc *= shape[k]

    def flat(idx):
        return int(np.dot(idx, strides))

    seen = set()
    minors = []
    for mode, nk in enumerate(shape):
        rest = [range(s) for k, s in enumerate(shape) if k != mode]
        cols = list(product(*rest)) if rest else [()]
        for a, b in combinations(range(nk), 2):
            for c_idx, d_idx in combinations(range(len(cols)), 2):
                col_c, col_d = cols[c_idx], cols[d_idx]

                def full(row, col):
                    out = list(col)
                    out.insert(mode, row)
                    return tuple(out)

                p, q = flat(full(a, col_c)), flat(full(b, col_d))
                r, s = flat(full(a, col_d)), flat(full(b, col_c))
                pos = tuple(sorted((p, q)))
                neg = tuple(sorted((r, s)))
                key = (pos, neg) if pos <= neg else (neg, pos)
                if pos == neg or key in seen:
                    continue
                seen.add(key)
                minors.append((pos, neg))
    return minors


def _minor_form(n, pos, neg) -> QuadraticForm:
    P = np.zeros((n, n))
    p, q = pos
    r, s = neg
    P[p, q] += 0.5
    P[q, p] += 0.5
    P[r, s] -= 0.5
    P[s, r] -= 0.5
    return QuadraticForm(P, np.zeros(n), 0.0)


def rank_one_approximation(shape) -> ParametricProblem:
    """Nearest rank-one tensor of the given mode sizes; x = (z0, vec tensor)."""
    shape = tuple(int(s) for s in shape)
    if len(shape) < 2 or any(s < 1 for s in shape):
        raise InvalidInputError("shape needs at least two modes of size >= 1")
    n = int(np.prod(shape))
    if n > 64:
        raise InvalidInputError("tensor too large (product of sizes must be <= 64)")
    cons = tuple(_minor_form(n, pos, neg) for pos, neg in _flattening_minors(shape))

    def objective(theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        return QuadraticForm(np.eye(n), -2.0 * theta, float(theta @ theta))

    def instantiate(theta):
        return homogenize(objective(theta), cons)

    dim = sum(shape) - len(shape) + 1

    def affine_view(theta):
        return AffineView(objective(theta), cons, dim_variety=dim)

    def ground_truth(rng):
        vecs = [rng.standard_normal(s) for s in shape]
        vecs = [v / np.linalg.norm(v) for v in vecs]
        tensor = vecs[0]
        for v in vecs[1:]:
            tensor = np.multiply.outer(tensor, v)
        theta = tensor.reshape(-1)
        return theta, np.concatenate([[1.0], theta])

    oracle = None
    if len(shape) == 2:
        def oracle(theta, shape=shape):
            mat = np.asarray(theta, dtype=float).reshape(shape)
            s = np.linalg.svd(mat, compute_uv=False)
            return float(np.sum(s[1:] ** 2))

    return ParametricProblem(
        name="rank-one",
        d=n,
        instantiate=instantiate,
        affine_view=affine_view,
        theta_independent_feasible_set=True,
        ground_truth=ground_truth,
        z_indices=(0,),
        oracle=oracle,
        theta_doc=f"tensor of shape {shape}, row-major",
    )


def best_rank_one_matrix(theta, shape) -> np.ndarray:
    """Eckart-Young truncation for the matrix case (oracle companion)."""
    mat = np.asarray(theta, dtype=float).reshape(shape)
    u, s, vt = np.linalg.svd(mat)
    return s[0] * np.outer(u[:, 0], vt[0])
