"""Dense primal-dual interior-point solver for equality-form SDPs.

Solves   min  C . S   s.t.  A_i . S = b_i (i=1..m),  S >= 0,
whose conic dual is  max b'y  s.t.  Z = C - sum(y_i A_i) >= 0.

Nesterov-Todd scaled predictor-corrector steps, dense factorizations only,
infeasible start S = Z = tau*I with tau = 1 + max|b| + ||C||_F.  Aimed at
desk scale (N up to ~100, m up to ~400); no sparsity is exploited.

Sign convention: the multipliers lam of the Lagrangian-dual orientation
(max sum lam_i b_i^cons with G + sum lam_i H_i >= 0) relate to the conic
dual variable by lam = -y; `build_relaxation` and `dual_multipliers`
implement both sides of that map.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError
from .linalg import sym_eig
from .model import HomQCQP

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_DUAL_INFEASIBLE = "dual_infeasible"  # primal unbounded below
STATUS_MAX_ITER = "max_iter"
STATUS_NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SDPProblem:
    C: np.ndarray
    A: np.ndarray  # (m, N, N), each symmetric
    b: np.ndarray  # (m,)

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise InvalidInputError("C must be square")
        if A.ndim != 3 or A.shape[1:] != C.shape:
            raise InvalidInputError("A must be (m, N, N) matching C")
        if b.shape[0] != A.shape[0] or b.shape[0] < 1:
            raise InvalidInputError("b length must equal the constraint count (>= 1)")
        if not (np.all(np.isfinite(C)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidInputError("SDP data contains non-finite entries")
        object.__setattr__(self, "C", 0.5 * (C + C.T))
        object.__setattr__(self, "A", 0.5 * (A + np.transpose(A, (0, 2, 1))))
        object.__setattr__(self, "b", b)

    @property
    def N(self) -> int:
        return self.C.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class SDPSettings:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.9
    # iterate-norm growth ratio that triggers the unboundedness/ray check
    divergence_ratio: float = 1e6
    certify_rays: bool = True


@dataclass
class SDPResult:
    S: np.ndarray
    y: np.ndarray
    Z: np.ndarray
    pval: float
    dval: float
    status: str
    residuals: tuple[float, float, float]  # (primal_feas, dual_feas, rel_gap)
    iterations: int

    @property
    def primal_feas(self) -> float:
        return self.residuals[0]

    @property
    def dual_feas(self) -> float:
        return self.residuals[1]

    @property
    def rel_gap(self) -> float:
        return self.residuals[2]


def build_relaxation(p: HomQCQP) -> SDPProblem:
    """Semidefinite relaxation of a homogeneous QCQP.

    C = G, A_i = H_i, b_i = -b_i^cons, so the conic dual (after lam = -y)
    is exactly:  max sum lam_i b_i^cons  s.t.  G + sum lam_i H_i >= 0.
    """
    return SDPProblem(C=p.G, A=p.constraint_matrices(), b=-p.constants())


def dual_multipliers(result: SDPResult) -> np.ndarray:
    """Lagrangian-dual multipliers lam = -y of the conic dual variable."""
    return -result.y


def _residuals(prob: SDPProblem, S, y, Z) -> tuple[float, float, float, float, float]:
    pval = float(np.tensordot(prob.C, S))
    dval = float(prob.b @ y)
    rp = prob.b - np.tensordot(prob.A, S, axes=([1, 2], [0, 1]))
    Rd = prob.C - np.tensordot(y, prob.A, axes=1) - Z
    pfeas = float(np.linalg.norm(rp) / (1.0 + np.linalg.norm(prob.b)))
    dfeas = float(np.linalg.norm(Rd) / (1.0 + np.linalg.norm(prob.C)))
    gap = abs(pval - dval) / (1.0 + abs(pval) + abs(dval))
    return pval, dval, pfeas, dfeas, gap


def _inv_sqrt_psd(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(M^{1/2}, M^{-1/2}) for symmetric M, eigenvalues floored away from 0."""
    w, v = np.linalg.eigh(M)
    floor = max(float(w[-1]), 1e-300) * 1e-16
    w = np.maximum(w, floor)
    sq = np.sqrt(w)
    half = (v * sq) @ v.T
    inv_half = (v / sq) @ v.T
    return half, inv_half


def _max_step(X: np.ndarray, dX: np.ndarray, inv_half: np.ndarray) -> float:
    """sup {alpha : X + alpha dX >= 0} given X^{-1/2}."""
    T = inv_half @ dX @ inv_half
    lam_min = float(np.linalg.eigvalsh(0.5 * (T + T.T))[0])
    if lam_min >= -1e-14:
        return np.inf
    return -1.0 / lam_min


def solve_sdp(prob: SDPProblem, settings: SDPSettings | None = None) -> SDPResult:
    """Run the interior-point method; never raises on solver trouble.

    Detected primal unboundedness (= infeasible dual) is certified by an
    auxiliary improving-ray solve and reported via status, as is suspected
    primal infeasibility.  max_iter / numerical_failure carry best iterates.
    """
    st = settings or SDPSettings()
    N, m = prob.N, prob.m
    tau = 1.0 + (float(np.max(np.abs(prob.b))) if m else 0.0) + float(np.linalg.norm(prob.C))
    S = tau * np.eye(N)
    Z = tau * np.eye(N)
    y = np.zeros(m)

    A_flat = prob.A.reshape(m, N * N)
    best = None
    best_score = np.inf
    status = STATUS_MAX_ITER
    iterations = 0
    last_improvement = 0

    for it in range(1, st.max_iter + 1):
        iterations = it
        pval, dval, pfeas, dfeas, gap = _residuals(prob, S, y, Z)
        score = max(pfeas, dfeas, gap)
        if score < 0.5 * best_score:
            last_improvement = it
        if score < best_score:
            best_score = score
            best = (S.copy(), y.copy(), Z.copy())
        if pfeas <= st.feas_tol and dfeas <= st.feas_tol and gap <= st.gap_tol:
            status = STATUS_OPTIMAL
            break
        if it - last_improvement > 30:
            break  # stalled; post-exit diagnosis decides the status

        # divergence checks before an expensive step
        if (np.linalg.norm(S) > st.divergence_ratio * tau * N and pval < -tau) \
                or pval < -st.divergence_ratio * tau:
            status = _certify_unbounded(prob, st)
            break
        if dval > st.divergence_ratio * tau * max(1.0, np.linalg.norm(prob.b)) \
                and dfeas <= 1e2 * st.feas_tol:
            status = STATUS_INFEASIBLE
            break

        mu = float(np.tensordot(S, Z)) / N
        try:
            S_half, S_inv_half = _inv_sqrt_psd(S)
            T = S_half @ Z @ S_half
            _, T_inv_half = _inv_sqrt_psd(T)
            W = S_half @ T_inv_half @ S_half
            W = 0.5 * (W + W.T)
            wz, vz = np.linalg.eigh(Z)
            wz = np.maximum(wz, max(float(wz[-1]), 1e-300) * 1e-16)
            Z_inv = (vz / wz) @ vz.T

            rp = prob.b - A_flat @ S.reshape(-1)
            Rd = prob.C - np.tensordot(y, prob.A, axes=1) - Z
            WAW = np.einsum("ik,mkl,lj->mij", W, prob.A, W, optimize=True)
            M = A_flat @ WAW.reshape(m, N * N).T
            M = 0.5 * (M + M.T)
            M_fact = _factor_spd(M)

            AWRdW = A_flat @ (W @ Rd @ W).reshape(-1)
            AZinv = A_flat @ Z_inv.reshape(-1)

            def direction(sigma_mu: float):
                rhs = prob.b + AWRdW - sigma_mu * AZinv
                dy = M_fact(rhs)
                dZ = Rd - np.tensordot(dy, prob.A, axes=1)
                dS = sigma_mu * Z_inv - S - W @ dZ @ W
                return dy, 0.5 * (dZ + dZ.T), 0.5 * (dS + dS.T)

            # predictor
            dy_a, dZ_a, dS_a = direction(0.0)
            _, Z_inv_half = _inv_sqrt_psd(Z)
            ap = min(1.0, st.step_fraction * _max_step(S, dS_a, S_inv_half))
            ad = min(1.0, st.step_fraction * _max_step(Z, dZ_a, Z_inv_half))
            mu_aff = float(np.tensordot(S + ap * dS_a, Z + ad * dZ_a)) / N
            sigma = min(1.0, max(0.0, (max(mu_aff, 0.0) / mu)) ** 3)

            # corrector, with step fraction pushed toward 1 as steps lengthen
            dy, dZ, dS = direction(sigma * mu)
            ap_full = _max_step(S, dS, S_inv_half)
            ad_full = _max_step(Z, dZ, Z_inv_half)
            gamma = min(0.99, st.step_fraction + 0.09 * min(1.0, ap_full, ad_full))
            ap = min(1.0, gamma * ap_full)
            ad = min(1.0, gamma * ad_full)
        except np.linalg.LinAlgError:
            status = STATUS_NUMERICAL_FAILURE
            break

        if not (np.isfinite(ap) and np.isfinite(ad)):
            ap = 1.0 if not np.isfinite(ap) else ap
            ad = 1.0 if not np.isfinite(ad) else ad
        S = 0.5 * ((S + ap * dS) + (S + ap * dS).T)
        y = y + ad * dy
        Z = 0.5 * ((Z + ad * dZ) + (Z + ad * dZ).T)

        # stall guard: complementarity exhausted but residual targets unmet
        if mu < 1e-16 * tau and score > 10 * max(st.feas_tol, st.gap_tol):
            status = STATUS_NUMERICAL_FAILURE
            break

    if status in (STATUS_MAX_ITER, STATUS_NUMERICAL_FAILURE) and best is not None:
        S, y, Z = best
    pval, dval, pfeas, dfeas, gap = _residuals(prob, S, y, Z)
    if status not in (STATUS_OPTIMAL, STATUS_INFEASIBLE, STATUS_DUAL_INFEASIBLE):
        if pfeas <= st.feas_tol and dfeas <= st.feas_tol and gap <= st.gap_tol:
            status = STATUS_OPTIMAL
        elif st.certify_rays and pfeas <= max(1e-6, 1e2 * st.feas_tol) \
                and dfeas >= 1e2 * st.feas_tol:
            # the dual iterate never became feasible: test for an improving
            # ray; a value <= ~0 means the dual is at best weakly feasible,
            # which together with the stalled dual residual we report as
            # infeasible on the dual side
            ray = _improving_ray_value(prob, st)
            if ray is not None and ray <= 1e-6 * (1.0 + float(np.linalg.norm(prob.C))):
                status = STATUS_DUAL_INFEASIBLE
    return SDPResult(
        S=S, y=y, Z=Z, pval=pval, dval=dval, status=status,
        residuals=(pfeas, dfeas, gap), iterations=iterations,
    )


def _factor_spd(M: np.ndarray):
    """Cholesky solve closure with jitter retries for near-singular Schur systems."""
    m = M.shape[0]
    jitter = 0.0
    base = float(np.trace(M)) / max(m, 1)
    for attempt in range(4):
        try:
            L = np.linalg.cholesky(M + jitter * np.eye(m))

            def solve(rhs, L=L):
                u = np.linalg.solve(L, rhs)
                return np.linalg.solve(L.T, u)

            return solve
        except np.linalg.LinAlgError:
            jitter = max(1e-14 * base, 10.0 * jitter) if jitter else 1e-14 * max(base, 1.0)
    raise np.linalg.LinAlgError("Schur complement not positive definite")


def _improving_ray_value(prob: SDPProblem, st: SDPSettings) -> float | None:
    """Value of the trace-normalized ray SDP: min C.R, A(R)=0, tr R=1, R>=0.

    A negative value certifies an improving ray (the dual is strongly
    infeasible); a value near zero shows the dual has no strictly feasible
    point.  None when the auxiliary solve is itself inconclusive.
    """
    m, N = prob.m, prob.N
    A_aux = np.concatenate([prob.A, np.eye(N)[None, :, :]], axis=0)
    b_aux = np.concatenate([np.zeros(m), [1.0]])
    aux = SDPProblem(C=prob.C, A=A_aux, b=b_aux)
    res = solve_sdp(aux, replace(st, certify_rays=False, max_iter=100,
                                 feas_tol=max(st.feas_tol, 1e-8),
                                 gap_tol=max(st.gap_tol, 1e-8)))
    if res.status == STATUS_OPTIMAL:
        return float(res.pval)
    return None


def _certify_unbounded(prob: SDPProblem, st: SDPSettings) -> str:
    """Confirm objective divergence with the improving-ray test."""
    if not st.certify_rays:
        return STATUS_DUAL_INFEASIBLE
    ray_tol = 1e-7 * (1.0 + float(np.linalg.norm(prob.C)))
    ray = _improving_ray_value(prob, st)
    if ray is not None and ray < -ray_tol:
        return STATUS_DUAL_INFEASIBLE
    return STATUS_NUMERICAL_FAILURE


def extract_rank_one(S, ratio_tol: float = 1e-6, hom_index: int | None = None):
    """Recover x with S ~ xx' when the second eigenvalue is negligible.

    Returns None unless nu_{N-1}/nu_N <= ratio_tol.  The sign is fixed by
    making the hom_index coordinate positive (first coordinate of
    non-negligible size when hom_index is None).
    """
    dec = sym_eig(S)
    w, v = dec.values, dec.vectors
    top = float(w[-1])
    if top <= 0.0:
        return None
    second = float(w[-2]) if w.shape[0] > 1 else 0.0
    if abs(second) > ratio_tol * top:
        return None
    x = np.sqrt(top) * v[:, -1]
    if hom_index is not None:
        pivot = x[hom_index]
    else:
        nz = np.flatnonzero(np.abs(x) > 1e-12 * np.sqrt(top))
        pivot = x[nz[0]] if nz.size else 1.0
    if pivot < 0:
        x = -x
    return x


def to_sdpa(prob: SDPProblem) -> str:
    """Sparse SDPA rendering (one block, one-based indices).

    Encodes the instance as the SDPA dual  max F0 . Y  s.t.  F_i . Y = c_i,
    Y >= 0, with F0 = -C, F_i = A_i, c = b; external solvers then report
    -val for our primal optimum.
    """
    lines = [f"{prob.m}", "1", f"{prob.N}"]
    lines.append(" ".join(repr(float(v)) for v in prob.b))

    def emit(idx: int, M: np.ndarray):
        out = []
        for i in range(prob.N):
            for j in range(i, prob.N):
                if M[i, j] != 0.0:
                    out.append(f"{idx} 1 {i + 1} {j + 1} {repr(float(M[i, j]))}")
        return out

    lines += emit(0, -prob.C)
    for k in range(prob.m):
        lines += emit(k + 1, prob.A[k])
    return "\n".join(lines) + "\n"
