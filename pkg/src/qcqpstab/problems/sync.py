"""Synchronization over the orthogonal group, rigid motions, and Procrustes.

All three families share the pattern "sum of squared linear residuals over a
product of Stiefel-type manifolds": the objective is assembled from linear
residual maps, constraints fix R'R = I per block, and the anchor (vertex 0,
or the data matrices for Procrustes) is folded into the objective through
the homogenizing coordinate.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError
from ..model import AffineView, ParametricProblem, QuadraticForm, homogenize
from .graphs import GraphSpec


def _residual_objective(rows: np.ndarray, offsets: np.ndarray) -> QuadraticForm:
    """Quadratic form of sum_k (rows_k . y + offsets_k)^2."""
    P = rows.T @ rows
    q = 2.0 * rows.T @ offsets
    return QuadraticForm(P, q, float(offsets @ offsets))


def _orthogonality_forms(n_y: int, block_start: int, d: int):
    """R'R = I for the d x d block stored row-major at block_start."""
    forms = []
    for a in range(d):
        for b in range(a, d):
            P = np.zeros((n_y, n_y))
            for k in range(d):
                i = block_start + k * d + a
                j = block_start + k * d + b
                P[i, j] += 0.5
                P[j, i] += 0.5
            r = -1.0 if a == b else 0.0
            forms.append(QuadraticForm(P, np.zeros(n_y), r))
    return forms


def _random_rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    A = rng.standard_normal((d, d))
    q, r = np.linalg.qr(A)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q


def rotation_sync(g: GraphSpec, d: int) -> ParametricProblem:
    """Recover absolute rotations from relative measurements R_hat_ij.

    minimize sum_{ij in E} ||R_j - R_hat_ij R_i||_F^2 over R_i'R_i = I,
    with R_0 = I anchored.  x = (z0, vec R_1, ..., vec R_n) row-major;
    theta stacks vec(R_hat_ij) over the edge list order.
    """
    if d < 2:
        raise InvalidInputError("dimension must be at least 2")
    n = g.n_vertices - 1
    n_y = n * d * d
    edges = g.edges
    d2 = d * d

    def block(i):
        return (i - 1) * d2  # vertex i >= 1

    def unpack(theta):
        theta = np.asarray(theta, dtype=float)
        return [theta[k * d2:(k + 1) * d2].reshape(d, d) for k in range(len(edges))]

    def objective(theta):
        rhats = unpack(theta)
        rows = []
        offs = []
        for (i, j), rh in zip(edges, rhats):
            # residual entries of R_j - R_hat R_i, row-major over (a, b)
            for a in range(d):
                for b in range(d):
                    row = np.zeros(n_y)
                    off = 0.0
                    if j >= 1:
                        row[block(j) + a * d + b] += 1.0
                    else:
                        off += 1.0 if a == b else 0.0
                    if i >= 1:
                        for k in range(d):
                            row[block(i) + k * d + b] -= rh[a, k]
                    else:
                        off -= rh[a, b]
                    rows.append(row)
                    offs.append(off)
        return _residual_objective(np.array(rows), np.array(offs))

    cons = tuple(f for i in range(1, n + 1) for f in _orthogonality_forms(n_y, block(i), d))

    def instantiate(theta):
        return homogenize(objective(theta), cons)

    def affine_view(theta):
        return AffineView(objective(theta), cons, dim_variety=n * d * (d - 1) // 2)

    def ground_truth(rng):
        rots = [np.eye(d)] + [_random_rotation(rng, d) for _ in range(n)]
        theta = np.concatenate([(rots[j] @ rots[i].T).reshape(-1) for i, j in edges])
        x = np.concatenate([[1.0]] + [rots[i].reshape(-1) for i in range(1, n + 1)])
        return theta, x

    return ParametricProblem(
        name="rotation-sync",
        d=len(edges) * d2,
        instantiate=instantiate,
        affine_view=affine_view,
        theta_independent_feasible_set=True,
        ground_truth=ground_truth,
        z_indices=(0,),
        oracle=None,
        theta_doc=f"stacked d x d relative rotations for edges {list(edges)}",
    )


def se_sync(g: GraphSpec, d: int) -> ParametricProblem:
    """Rigid-motion synchronization: rotations plus translations.

    minimize sum_{ij} ||R_j - R_hat_ij R_i||_F^2 + ||u_j - u_i - R_i u_hat_ij||^2
    with R_0 = I, u_0 = 0.  x = (z0, vec R_1..R_n, u_1..u_n); theta stacks
    (vec R_hat_ij, u_hat_ij) per edge.
    """
    if d < 2:
        raise InvalidInputError("dimension must be at least 2")
    n = g.n_vertices - 1
    d2 = d * d
    n_y = n * d2 + n * d
    edges = g.edges
    per_edge = d2 + d

    def rblock(i):
        return (i - 1) * d2

    def ublock(i):
        return n * d2 + (i - 1) * d

    def unpack(theta):
        theta = np.asarray(theta, dtype=float)
        out = []
        for k in range(len(edges)):
            seg = theta[k * per_edge:(k + 1) * per_edge]
            out.append((seg[:d2].reshape(d, d), seg[d2:]))
        return out

    def objective(theta):
        data = unpack(theta)
        rows = []
        offs = []
        for (i, j), (rh, uh) in zip(edges, data):
            for a in range(d):
                for b in range(d):
                    row = np.zeros(n_y)
                    off = 0.0
                    if j >= 1:
                        row[rblock(j) + a * d + b] += 1.0
                    else:
                        off += 1.0 if a == b else 0.0
                    if i >= 1:
                        for k in range(d):
                            row[rblock(i) + k * d + b] -= rh[a, k]
                    else:
                        off -= rh[a, b]
                    rows.append(row)
                    offs.append(off)
            for a in range(d):
                row = np.zeros(n_y)
                off = 0.0
                if j >= 1:
                    row[ublock(j) + a] += 1.0
                if i >= 1:
                    row[ublock(i) + a] -= 1.0
                    for k in range(d):
                        row[rblock(i) + a * d + k] -= uh[k]
                else:
                    off -= uh[a]
                rows.append(row)
                offs.append(off)
        return _residual_objective(np.array(rows), np.array(offs))

    cons = tuple(f for i in range(1, n + 1) for f in _orthogonality_forms(n_y, rblock(i), d))

    def instantiate(theta):
        return homogenize(objective(theta), cons)

    def affine_view(theta):
        return AffineView(objective(theta), cons,
                          dim_variety=n * d * (d - 1) // 2 + n * d)

    def ground_truth(rng):
        rots = [np.eye(d)] + [_random_rotation(rng, d) for _ in range(n)]
        trans = [np.zeros(d)] + [rng.normal(0.0, 1.0, d) for _ in range(n)]
        parts = []
        for i, j in edges:
            parts.append((rots[j] @ rots[i].T).reshape(-1))
            parts.append(rots[i].T @ (trans[j] - trans[i]))
        theta = np.concatenate(parts)
        x = np.concatenate([[1.0]] + [rots[i].reshape(-1) for i in range(1, n + 1)]
                           + [trans[i] for i in range(1, n + 1)])
        return theta, x

    return ParametricProblem(
        name="se-sync",
        d=len(edges) * per_edge,
        instantiate=instantiate,
        affine_view=affine_view,
        theta_independent_feasible_set=True,
        ground_truth=ground_truth,
        z_indices=(0,),
        oracle=None,
        theta_doc=f"per edge: vec(R_hat) then u_hat, edges {list(edges)}",
    )


def procrustes(m1: int, n: int, k: int, m2: int) -> ParametricProblem:
    """Weighted orthogonal Procrustes: min ||A X C - B||_F^2, X'X = I_k.

    theta = (vec A, vec B, vec C) row-major; x = (z0, vec X).  Strict
    convexity needs X -> AXC injective; instances failing the numerical
    check carry a note on the instantiated problem.
    """
    if not (1 <= k <= n):
        raise InvalidInputError("need 1 <= k <= n")
    n_y = n * k
    sizes = (m1 * n, m1 * m2, k * m2)

    def unpack(theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape[0] != sum(sizes):
            raise InvalidInputError("theta length mismatch")
        A = theta[:sizes[0]].reshape(m1, n)
        B = theta[sizes[0]:sizes[0] + sizes[1]].reshape(m1, m2)
        C = theta[sizes[0] + sizes[1]:].reshape(k, m2)
        return A, B, C

    def objective(theta):
        A, B, C = unpack(theta)
        # vec_rowmajor(A X C) = kron(A, C') vec_rowmajor(X)
        L = np.kron(A, C.T)
        return _residual_objective(L, -B.reshape(-1))

    cons = tuple(_stiefel_forms(n_y, n, k))

    def instantiate(theta):
        p = homogenize(objective(theta), cons)
        A, B, C = unpack(theta)
        smin = np.linalg.svd(np.kron(A, C.T), compute_uv=False)
        notes = ()
        if smin.size == 0 or smin[-1] <= 1e-7 * max(1.0, smin[0]):
            notes = ("objective not strictly convex: X -> AXC is not injective",)
        if notes:
            p = type(p)(N=p.N, G=p.G, constraints=p.constraints,
                        hom_index=p.hom_index, notes=notes)
        return p

    def affine_view(theta):
        return AffineView(objective(theta), cons, dim_variety=n_y - k * (k + 1) // 2)

    def ground_truth(rng):
        A = rng.standard_normal((m1, n)) + 0.5 * np.eye(m1, n)
        C = rng.standard_normal((k, m2)) + 0.5 * np.eye(k, m2)
        q, r = np.linalg.qr(rng.standard_normal((n, k)))
        X = q * np.sign(np.diag(r))
        B = A @ X @ C
        theta = np.concatenate([A.reshape(-1), B.reshape(-1), C.reshape(-1)])
        return theta, np.concatenate([[1.0], X.reshape(-1)])

    return ParametricProblem(
        name="procrustes",
        d=sum(sizes),
        instantiate=instantiate,
        affine_view=affine_view,
        theta_independent_feasible_set=True,
        ground_truth=ground_truth,
        z_indices=(0,),
        oracle=None,
        theta_doc=f"(vec A {m1}x{n}, vec B {m1}x{m2}, vec C {k}x{m2})",
    )


def _stiefel_forms(n_y: int, n: int, k: int):
    """X'X = I_k for an n x k block stored row-major at offset 0."""
    forms = []
    for a in range(k):
        for b in range(a, k):
            P = np.zeros((n_y, n_y))
            for row in range(n):
                i = row * k + a
                j = row * k + b
                P[i, j] += 0.5
                P[j, i] += 0.5
            r = -1.0 if a == b else 0.0
            forms.append(QuadraticForm(P, np.zeros(n_y), r))
    return forms
