"""Dense symmetric linear algebra used by every other module.

Thin, validated wrappers around numpy.linalg with one shared rank
convention: a singular/eigen value counts as zero when it is at most
``rank_tol * max(1, sigma_max)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Default relative cutoff for all rank/corank decisions.
RANK_TOL = 1e-7


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return a


def sym(a) -> np.ndarray:
    """Exactly symmetric part of a square matrix ((a + a.T)/2 entrywise)."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class EigDecomposition:
    """Eigenvalues ascending, orthonormal eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray


def sym_eig(a) -> EigDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending."""
    a = as_matrix(a, "symmetric matrix")
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected square matrix, got shape {a.shape}")
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    return EigDecomposition(values=w, vectors=v)


def svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD (U, sigma descending, Vt) with a = U @ diag(sigma) @ Vt."""
    a = as_matrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return u, s, vt


def pseudo_inverse(a, tol: float = RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse; singular values below tol*sigma_max zeroed."""
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    a = as_matrix(a)
    return np.linalg.pinv(a, rcond=tol)


def singular_values(a) -> np.ndarray:
    a = as_matrix(a)
    return np.linalg.svd(a, compute_uv=False)


def numerical_rank(a, rank_tol: float = RANK_TOL) -> int:
    """Count of singular values above rank_tol * max(1, sigma_max)."""
    s = singular_values(a)
    if s.size == 0:
        return 0
    cut = rank_tol * max(1.0, float(s[0]))
    return int(np.sum(s > cut))


def corank(a, rank_tol: float = RANK_TOL) -> int:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError("corank needs a square matrix")
    return a.shape[0] - numerical_rank(a, rank_tol)


def spectral_norm(a) -> float:
    s = singular_values(a)
    return float(s[0]) if s.size else 0.0


def kernel_basis(a, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of a symmetric matrix."""
    dec = sym_eig(a)
    scale = max(1.0, float(np.max(np.abs(dec.values))) if dec.values.size else 0.0)
    mask = np.abs(dec.values) <= rank_tol * scale
    return dec.vectors[:, mask]


def orthonormal_complement(vectors: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(vectors) in R^n."""
    v = np.asarray(vectors, dtype=float).reshape(n, -1)
    if v.shape[1] == 0:
        return np.eye(n)
    q, _ = np.linalg.qr(v, mode="complete")
    r = numerical_rank(v)
    return q[:, r:]
