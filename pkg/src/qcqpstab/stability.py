"""Regularity checks and guaranteed stability radii around a tight parameter.

The quantitative guarantee has two modes: a general bound nu2/(K*M + L)
whose continuity constants K, L must be supplied by the caller, and a
nearest-point bound sigma_s/(2*M) whose constants are computed here from
the affine constraint Jacobian and Hessians.  The qualitative ladder
(restricted Slater, branch point, block regularity matrix) feeds the
general sufficient conditions for tightness to survive a perturbation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .certify import CertifySettings, certify_gap, check_corank_one
from .errors import FinslerHypothesisError, InvalidInputError
from .linalg import (
    RANK_TOL,
    kernel_basis,
    numerical_rank,
    orthonormal_complement,
    spectral_norm,
    svd,
    sym_eig,
)
from .model import (
    HomQCQP,
    ParametricProblem,
    affine_multiplier,
    lagrangian_hessian,
    lift_multiplier,
)
from .sdp import STATUS_OPTIMAL, SDPProblem, SDPSettings, solve_sdp


@dataclass(frozen=True)
class AcqResult:
    s: int            # codimension n - dim_Y
    sigma_s: float    # s-th largest singular value of the Jacobian
    holds: bool


def check_acq(jacobian, dim_variety: int, rank_tol: float = RANK_TOL) -> AcqResult:
    """Abadie constraint qualification: rank(J) equals the codimension.

    dim_variety is the declared local dimension; it is never inferred.
    """
    J = np.asarray(jacobian, dtype=float)
    if J.ndim != 2:
        raise InvalidInputError("jacobian must be a matrix")
    n = J.shape[1]
    if not (0 <= dim_variety <= n):
        raise InvalidInputError("declared dimension out of range")
    s = n - dim_variety
    sing = np.linalg.svd(J, compute_uv=False)
    scale = max(1.0, float(sing[0]) if sing.size else 0.0)
    if s == 0:
        sigma_s = math.inf
        holds = sing.size == 0 or float(sing[0]) <= rank_tol * scale
        return AcqResult(s=0, sigma_s=sigma_s, holds=holds)
    if s > sing.size:
        return AcqResult(s=s, sigma_s=0.0, holds=False)
    sigma_s = float(sing[s - 1])
    holds = sigma_s > rank_tol * scale
    if holds and s < sing.size:
        holds = float(sing[s]) <= rank_tol * scale
    return AcqResult(s=s, sigma_s=sigma_s, holds=holds)


def operator_norm_M(hessians) -> float:
    """Operator norm of mu -> (1/2) sum mu_i Hess_i, l2 -> Frobenius.

    Computed as the top singular value of the matrix whose columns are
    symmetric vectorizations (off-diagonal entries scaled by sqrt 2) of the
    halved Hessians.
    """
    hessians = [np.asarray(H, dtype=float) for H in hessians]
    if not hessians:
        raise InvalidInputError("need at least one Hessian")
    n = hessians[0].shape[0]
    iu = np.triu_indices(n)
    weights = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    cols = []
    for H in hessians:
        if H.shape != (n, n):
            raise InvalidInputError("Hessian dimension mismatch")
        cols.append(0.5 * H[iu] * weights)
    mat = np.stack(cols, axis=1)
    sing = np.linalg.svd(mat, compute_uv=False)
    return float(sing[0]) if sing.size else 0.0


@dataclass(frozen=True)
class StabilityRadius:
    value: float
    degenerate: bool  # True when the denominator vanished (radius = inf)


def stability_radius(nu2: float | None = None, K: float | None = None,
                     L: float | None = None, M: float | None = None,
                     sigma_s: float | None = None,
                     mode: str = "corollary") -> StabilityRadius:
    """Guaranteed tightness radius.

    mode="theorem":  nu2 / (K*M + L)
    mode="corollary" (nearest-point): sigma_s / (2*M)
    """
    if mode == "theorem":
        if nu2 is None or K is None or L is None or M is None:
            raise InvalidInputError("theorem mode needs nu2, K, L, M")
        if min(nu2, K, L, M) < 0:
            raise InvalidInputError("constants must be nonnegative")
        den = K * M + L
        if den == 0.0:
            return StabilityRadius(math.inf, True)
        return StabilityRadius(nu2 / den, False)
    if mode == "corollary":
        if sigma_s is None or M is None:
            raise InvalidInputError("corollary mode needs sigma_s and M")
        if sigma_s < 0 or M < 0:
            raise InvalidInputError("constants must be nonnegative")
        if M == 0.0:
            return StabilityRadius(math.inf, True)
        return StabilityRadius(sigma_s / (2.0 * M), False)
    raise InvalidInputError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# restricted Slater

@dataclass(frozen=True)
class SlaterResult:
    mu_star: np.ndarray
    t_star: float
    holds: bool
    V_dim: int
    inconclusive: bool = False


def restricted_slater(p: HomQCQP, x_bar, Q_bar, rs_tol: float = 1e-6,
                      rank_tol: float = RANK_TOL,
                      sdp_settings: SDPSettings | None = None) -> SlaterResult:
    """Strict feasibility of the multiplier-perturbation SDP.

    Basis B spans V = ker(Q_bar) orthogonal to x_bar; the auxiliary program
    maximizes t subject to sum(mu_i H_i x_bar) = 0,
    B'(sum mu_i H_i)B >= t I and the box |mu|_inf <= 1 (the condition is
    conic, so the box just makes the program bounded).
    """
    x_bar = np.asarray(x_bar, dtype=float).reshape(-1)
    if x_bar.shape[0] != p.N or not np.any(x_bar):
        raise InvalidInputError("x_bar must be a nonzero N-vector")
    K = kernel_basis(Q_bar, rank_tol)
    if K.shape[1] == 0:
        return SlaterResult(np.zeros(p.m), math.inf, True, 0)
    # remove the x_bar direction from the kernel
    coords = K.T @ x_bar
    if np.linalg.norm(coords) > rank_tol * np.linalg.norm(x_bar):
        inker = K @ coords / np.linalg.norm(coords)
        B = _complement_within(K, inker)
    else:
        B = K
    V_dim = B.shape[1]
    if V_dim == 0:
        return SlaterResult(np.zeros(p.m), math.inf, True, 0)

    H = p.constraint_matrices()
    E = np.stack([Hi @ x_bar for Hi in H], axis=1)  # N x m
    # mu must lie in ker(E); parametrize mu = Z c
    u, s, vt = svd(E)
    cut = rank_tol * max(1.0, float(s[0]) if s.size else 0.0)
    r = int(np.sum(s > cut))
    Z = vt[r:].T  # m x (m - r)
    if Z.shape[1] == 0:
        return SlaterResult(np.zeros(p.m), 0.0, False, V_dim)

    F = np.einsum("ai,mab,bj->mij", B, H, B, optimize=True)  # m x V x V
    FZ = np.tensordot(Z.T, F, axes=([1], [0]))               # r_z x V x V

    t_star, c_star, ok = _max_lmi_with_box(FZ, Z, sdp_settings)
    if not ok:
        return SlaterResult(np.zeros(p.m), 0.0, False, V_dim, inconclusive=True)
    mu_star = Z @ c_star
    return SlaterResult(mu_star, t_star, t_star > rs_tol, V_dim)


def _complement_within(K: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(K) minus the direction v (v in span(K))."""
    coords = K.T @ v
    comp = orthonormal_complement(coords.reshape(-1, 1), K.shape[1])
    return K @ comp


def _max_lmi_with_box(F: np.ndarray, Z: np.ndarray,
                      sdp_settings: SDPSettings | None = None) -> tuple[float, np.ndarray, bool]:
    """max t  s.t.  sum c_k F_k - t I >= 0,  |Z c|_inf <= 1.

    Encoded on the dual side of the standard-form solver with one
    block-diagonal PSD block: the LMI block plus 2m box diagonals.
    """
    rz, v = F.shape[0], F.shape[1]
    m = Z.shape[0]
    dim = v + 2 * m
    nvar = rz + 1

    C = np.zeros((dim, dim))
    C[v:, v:] = np.eye(2 * m)
    A = np.zeros((nvar, dim, dim))
    for k in range(rz):
        A[k, :v, :v] = -F[k]
        A[k, range(v, v + m), range(v, v + m)] = Z[:, k]
        A[k, range(v + m, dim), range(v + m, dim)] = -Z[:, k]
    A[rz, :v, :v] = np.eye(v)
    b = np.zeros(nvar)
    b[rz] = 1.0

    st = sdp_settings or SDPSettings(feas_tol=1e-9, gap_tol=1e-9, max_iter=150)
    res = solve_sdp(SDPProblem(C=C, A=A, b=b), st)
    usable = res.status == STATUS_OPTIMAL or max(res.residuals) <= 1e-6
    if not usable:
        return 0.0, np.zeros(rz), False
    return float(res.y[rz]), res.y[:rz].copy(), True


# ---------------------------------------------------------------------------
# restriction of the constraint Hessian combination to the kernel block

def restriction_matrix_A(p: HomQCQP, mu, z_indices) -> np.ndarray:
    """Kernel-block restriction of sum mu_i H_i in nearest-point coordinates.

    z_indices lists the kernel-block coordinates (the homogenizing one plus
    any auxiliary variables).  The remaining coordinates y are shifted by
    u = y - theta*z0 where theta is read off the objective's z0 column, so
    the output matches the closed forms obtained after that change of
    coordinates.  Assumes the objective is unit-diagonal in y (the
    nearest-point form ||y - theta*z0||^2).
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.shape[0] != p.m:
        raise InvalidInputError(f"expected {p.m} multipliers, got {mu.shape[0]}")
    z_indices = tuple(int(i) for i in z_indices)
    if len(set(z_indices)) != len(z_indices) or not z_indices:
        raise InvalidInputError("z_indices must be nonempty and distinct")
    if any(i < 0 or i >= p.N for i in z_indices):
        raise InvalidInputError("z_indices out of range")
    if p.hom_index is not None and p.hom_index not in z_indices:
        raise InvalidInputError("z_indices must contain the homogenizing coordinate")

    y_indices = [i for i in range(p.N) if i not in z_indices]
    W = np.zeros((p.N, len(z_indices)))
    for col, zi in enumerate(z_indices):
        W[zi, col] = 1.0
        if zi == p.hom_index:
            for yi in y_indices:
                W[yi, col] = -p.G[yi, p.hom_index]
    M = np.tensordot(mu, p.constraint_matrices(), axes=1)
    return W.T @ M @ W


# ---------------------------------------------------------------------------
# Finsler perturbation

def finsler_perturb(A, B, t_grid=None, rank_tol: float = RANK_TOL,
                    pd_tol: float = 0.0) -> float:
    """Smallest grid t with A + t*B positive definite.

    Precondition (checked first): v'Bv > 0 for every unit v in ker(A).
    Violations raise FinslerHypothesisError("Finsler hypothesis violated").
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    K = kernel_basis(A, rank_tol)
    if K.shape[1] > 0:
        restricted = sym_eig(K.T @ B @ K)
        if float(restricted.values[0]) <= pd_tol:
            raise FinslerHypothesisError("Finsler hypothesis violated")
    if t_grid is None:
        t_grid = np.geomspace(1e-8, 1.0, 50)
    for t in t_grid:
        w = sym_eig(A + t * B).values
        if float(w[0]) > pd_tol:
            return float(t)
    raise FinslerHypothesisError("no grid point made A + t*B positive definite")


@dataclass(frozen=True)
class PerturbResult:
    t: float
    nu2: float
    corank_one: bool


def multiplier_perturbation(p: HomQCQP, x_bar, lam_bar, mu, t_grid=None,
                            rank_tol: float = RANK_TOL) -> PerturbResult:
    """Perturb multipliers along mu until the Lagrangian Hessian has corank one.

    Restricts Q(lam_bar) and sum(mu_i H_i) to the complement of x_bar (both
    annihilate x_bar), checks the Finsler hypothesis there, then walks the
    grid for the first t where Q(lam_bar + t*mu) is PSD with corank one.
    """
    x_bar = np.asarray(x_bar, dtype=float).reshape(-1)
    Q_bar = lagrangian_hessian(p, lam_bar)
    Bmat = np.tensordot(np.asarray(mu, dtype=float), p.constraint_matrices(), axes=1)
    P = orthonormal_complement(x_bar.reshape(-1, 1), p.N)
    A_r = P.T @ Q_bar @ P
    B_r = P.T @ Bmat @ P

    K = kernel_basis(A_r, rank_tol)
    if K.shape[1] > 0:
        restricted = sym_eig(K.T @ B_r @ K)
        if float(restricted.values[0]) <= 0.0:
            raise FinslerHypothesisError("Finsler hypothesis violated")
    if t_grid is None:
        t_grid = np.geomspace(1e-8, 1.0, 50)
    lam_bar = np.asarray(lam_bar, dtype=float).reshape(-1)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    for t in t_grid:
        w = sym_eig(A_r + t * B_r).values
        if float(w[0]) <= 0.0:
            continue
        ok, nu2 = check_corank_one(lagrangian_hessian(p, lam_bar + t * mu), rank_tol)
        if ok:
            return PerturbResult(t=float(t), nu2=nu2, corank_one=True)
    raise FinslerHypothesisError("no grid point reached a corank-one Hessian")


# ---------------------------------------------------------------------------
# branch point and the block regularity matrix

@dataclass(frozen=True)
class BranchResult:
    min_projected_tangent_norm: float
    is_branch_point: bool


def branch_point_check(jacobian, Q_bar, rank_tol: float = RANK_TOL) -> BranchResult:
    """Does some tangent vector (ker of the constraint Jacobian) die under Q_bar?"""
    J = np.asarray(jacobian, dtype=float)
    Q_bar = np.asarray(Q_bar, dtype=float)
    n = Q_bar.shape[0]
    u, s, vt = np.linalg.svd(J) if J.size else (None, np.zeros(0), np.eye(n))
    cut = rank_tol * max(1.0, float(s[0]) if s.size else 0.0)
    r = int(np.sum(s > cut))
    T = vt[r:].T  # orthonormal kernel basis
    if T.shape[1] == 0:
        return BranchResult(math.inf, False)
    sing = np.linalg.svd(Q_bar @ T, compute_uv=False)
    min_norm = float(sing[-1]) if sing.size else 0.0
    scale = max(1.0, spectral_norm(Q_bar))
    return BranchResult(min_norm, min_norm <= rank_tol * scale)


def regularity_matrix_check(jacobian, Q_bar, rank_tol: float = RANK_TOL) -> bool:
    """Row independence of [[0, J'], [J^T, Q_bar]] with J' a maximal
    independent row subset of the constraint Jacobian."""
    J = np.asarray(jacobian, dtype=float)
    Q_bar = np.asarray(Q_bar, dtype=float)
    J_ind = _independent_rows(J, rank_tol)
    r, N = J_ind.shape
    m = J.shape[0]
    top = np.hstack([np.zeros((r, m)), J_ind])
    bottom = np.hstack([J.T, Q_bar])
    block = np.vstack([top, bottom])
    sing = np.linalg.svd(block, compute_uv=False)
    k = min(block.shape)
    scale = max(1.0, float(sing[0]) if sing.size else 0.0)
    # rows independent iff the r+N smallest singular value is nonzero
    return block.shape[0] <= block.shape[1] and float(sing[k - 1]) > rank_tol * scale


def _independent_rows(J: np.ndarray, rank_tol: float) -> np.ndarray:
    """Greedy maximal subset of rows with independent gradients."""
    if J.size == 0:
        return J.reshape(0, J.shape[1] if J.ndim == 2 else 0)
    target = numerical_rank(J, rank_tol)
    rows: list[np.ndarray] = []
    idx: list[int] = []
    for i in range(J.shape[0]):
        cand = J[idx + [i], :]
        if numerical_rank(cand, rank_tol) == len(idx) + 1:
            idx.append(i)
        if len(idx) == target:
            break
    return J[idx, :]


def homogeneous_jacobian(p: HomQCQP, x) -> np.ndarray:
    """Constraint Jacobian of the homogeneous problem at x (rows 2 H_i x)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return np.array([2.0 * (c.H @ x) for c in p.constraints])


def assess_R2(fam: ParametricProblem) -> str:
    """'holds_by_declaration' when the feasible set is declared
    parameter-independent, else 'unknown'; never inferred numerically."""
    return "holds_by_declaration" if fam.theta_independent_feasible_set else "unknown"


# ---------------------------------------------------------------------------
# full report

@dataclass
class StabilityReport:
    theta: np.ndarray
    acq_s: int
    acq_sigma_s: float
    acq_holds: bool
    nu2: float
    K: Optional[float]
    L: Optional[float]
    M: float
    radius_thm: Optional[float]
    radius_cor: Optional[float]
    rs_mu_star: np.ndarray
    rs_t_star: float
    rs_holds: bool
    rs_V_dim: int
    rs_inconclusive: bool
    branch_min_norm: float
    is_branch_point: bool
    regularity_matrix_full_rank: bool
    r2: str

    def to_dict(self) -> dict:
        return {
            "theta": [float(v) for v in self.theta],
            "acq": {"s": self.acq_s, "sigma_s": _json_float(self.acq_sigma_s),
                    "holds": self.acq_holds},
            "constants": {"nu2": _json_float(self.nu2), "K": self.K, "L": self.L,
                          "M": _json_float(self.M)},
            "radius_thm": _json_float(self.radius_thm),
            "radius_cor": _json_float(self.radius_cor),
            "rs": {"mu_star": [float(v) for v in self.rs_mu_star],
                   "t_star": _json_float(self.rs_t_star), "holds": self.rs_holds,
                   "V_dim": self.rs_V_dim, "inconclusive": self.rs_inconclusive},
            "branch_point": {"min_projected_tangent_norm": _json_float(self.branch_min_norm),
                             "is_branch_point": self.is_branch_point},
            "regularity_matrix_full_rank": self.regularity_matrix_full_rank,
            "r2": self.r2,
        }


def _json_float(v):
    if v is None:
        return None
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return v


def stability_report(fam: ParametricProblem, theta_bar, x_bar=None,
                     K: float | None = None, L: float | None = None,
                     rank_tol: float = RANK_TOL, rs_tol: float = 1e-6,
                     certify_settings: CertifySettings | None = None) -> StabilityReport:
    """Assemble the full report at a tight parameter theta_bar.

    x_bar may be supplied; otherwise it is recovered by certifying theta_bar
    (which must then be certified tight or degenerate-tight).
    """
    theta_bar = fam.check_theta(theta_bar)
    p = fam.instantiate(theta_bar)
    if x_bar is None:
        cert = certify_gap(fam, theta_bar, certify_settings)
        if cert.x_hat is None:
            raise InvalidInputError(
                "could not recover a primal point at theta_bar; supply x_bar")
        x_bar = cert.x_hat
    x_bar = np.asarray(x_bar, dtype=float).reshape(-1)

    if fam.affine_view is None:
        raise InvalidInputError("stability report needs an affine view")
    view = fam.affine_view(theta_bar)
    hom = p.hom_index if p.hom_index is not None else 0
    scale = x_bar[hom]
    if abs(scale) < 1e-12:
        raise InvalidInputError("x_bar has vanishing homogenizing coordinate")
    y_bar = np.delete(x_bar / scale, hom)

    J_aff = view.jacobian(y_bar)
    acq = check_acq(J_aff, view.dim_variety, rank_tol)
    M = operator_norm_M([f.hessian for f in view.constraints])

    mu_bar, _ = affine_multiplier(view.objective.gradient(y_bar), J_aff)
    lam_bar = lift_multiplier(p, x_bar, mu_bar)
    Q_bar = lagrangian_hessian(p, lam_bar)
    _, nu2 = check_corank_one(Q_bar, rank_tol)

    radius_cor = None
    if view.is_nearest_point_form and acq.holds:
        radius_cor = stability_radius(sigma_s=acq.sigma_s, M=M, mode="corollary").value
    radius_thm = None
    if K is not None and L is not None:
        radius_thm = stability_radius(nu2=nu2, K=K, L=L, M=M, mode="theorem").value

    rs = restricted_slater(p, x_bar, Q_bar, rs_tol=rs_tol, rank_tol=rank_tol)
    J_hom = homogeneous_jacobian(p, x_bar)
    branch = branch_point_check(J_hom, Q_bar, rank_tol)
    reg_ok = regularity_matrix_check(J_hom, Q_bar, rank_tol)

    return StabilityReport(
        theta=theta_bar,
        acq_s=acq.s, acq_sigma_s=acq.sigma_s, acq_holds=acq.holds,
        nu2=nu2, K=K, L=L, M=M,
        radius_thm=radius_thm, radius_cor=radius_cor,
        rs_mu_star=rs.mu_star, rs_t_star=rs.t_star, rs_holds=rs.holds,
        rs_V_dim=rs.V_dim, rs_inconclusive=rs.inconclusive,
        branch_min_norm=branch.min_projected_tangent_norm,
        is_branch_point=branch.is_branch_point,
        regularity_matrix_full_rank=reg_ok,
        r2=assess_R2(fam),
    )
