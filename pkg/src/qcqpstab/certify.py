"""Zero-duality-gap certification at a fixed parameter value.

The pipeline solves the semidefinite relaxation, maps the conic dual
variable back to Lagrangian multipliers, attempts rank-one extraction, and
grades the outcome against the optimality checklist (feasibility,
multiplier, PSD Hessian, corank one).  A positive gap is only ever declared
when a primal value strictly above the dual value has been independently
established, either by a feasible extracted point or by a caller-supplied
oracle; a rank-deficient relaxation alone is reported as inconclusive.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import RANK_TOL, numerical_rank, sym_eig
from .model import HomQCQP, ParametricProblem, kkt_residuals, lagrangian_hessian
from .sdp import (
    STATUS_OPTIMAL,
    SDPSettings,
    build_relaxation,
    dual_multipliers,
    extract_rank_one,
    solve_sdp,
)

VERDICT_TIGHT = "certified_tight"
VERDICT_DEGENERATE = "tight_but_degenerate"
VERDICT_GAP = "gap_positive"
VERDICT_INCONCLUSIVE = "inconclusive"


def check_corank_one(Q, rank_tol: float = RANK_TOL) -> tuple[bool, float]:
    """(is_corank_one, nu2): smallest eigenvalue ~ 0, second one clearly positive."""
    dec = sym_eig(Q)
    w = dec.values
    nu2 = float(w[1]) if w.shape[0] > 1 else float("inf")
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)
    ok = abs(float(w[0])) <= rank_tol * scale and nu2 > rank_tol * scale
    return ok, nu2


@dataclass(frozen=True)
class CertifySettings:
    gap_tol: float = 1e-6          # relative duality-gap tolerance
    feas_tol: float = 1e-6         # feasibility of the extracted point (scaled)
    rank_tol: float = RANK_TOL
    ratio_tol: float = 1e-6        # eigenvalue ratio for rank-one extraction
    # margin factor: a positive gap must exceed gap_positive_margin * gap_tol
    gap_positive_margin: float = 10.0
    sdp: SDPSettings = field(
        default_factory=lambda: SDPSettings(feas_tol=1e-9, gap_tol=1e-9, max_iter=150)
    )
    # residual level at which a non-optimal solver exit is still usable
    usable_residual: float = 1e-7


@dataclass
class GapCertificate:
    theta: np.ndarray
    dval: float
    pval_candidate: Optional[float]
    gap_abs: Optional[float]
    gap_rel: Optional[float]
    lam: np.ndarray
    corank_Q: int
    nu2: float
    x_hat: Optional[np.ndarray]
    rank_S: int
    conditions: dict
    verdict: str
    solver_status: str
    solver_residuals: tuple[float, float, float]
    solver_iterations: int
    solve_time: float

    def to_dict(self) -> dict:
        def opt(v):
            return None if v is None else float(v)

        return {
            "theta": [float(v) for v in self.theta],
            "dval": float(self.dval),
            "pval_candidate": opt(self.pval_candidate),
            "gap_abs": opt(self.gap_abs),
            "gap_rel": opt(self.gap_rel),
            "lambda": [float(v) for v in self.lam],
            "corank_Q": int(self.corank_Q),
            "nu2": float(self.nu2),
            "x_hat": None if self.x_hat is None else [float(v) for v in self.x_hat],
            "rank_S": int(self.rank_S),
            "conditions": {k: bool(v) for k, v in self.conditions.items()},
            "verdict": self.verdict,
            "solver": {
                "status": self.solver_status,
                "primal_feas": float(self.solver_residuals[0]),
                "dual_feas": float(self.solver_residuals[1]),
                "rel_gap": float(self.solver_residuals[2]),
                "iterations": int(self.solver_iterations),
            },
            "solve_time": float(self.solve_time),
        }


def _kkt_polish(p: HomQCQP, x, lam, iterations: int = 5):
    """Least-squares Newton on (h(x), Q(lam) x) = 0 to sharpen an extracted
    primal/dual pair; returns the input unchanged if the refinement does not
    reduce the residual."""
    H = p.constraint_matrices()
    b = p.constants()

    def residual(x, lam):
        h = np.einsum("mij,i,j->m", H, x, x) + b
        Q = p.G + np.tensordot(lam, H, axes=1)
        return np.concatenate([h, Q @ x]), Q

    x0, lam0 = np.asarray(x, dtype=float), np.asarray(lam, dtype=float)
    r0, _ = residual(x0, lam0)
    best_x, best_lam, best_norm = x0, lam0, float(np.linalg.norm(r0))
    x, lam = x0.copy(), lam0.copy()
    for _ in range(iterations):
        r, Q = residual(x, lam)
        Jh = 2.0 * np.einsum("mij,j->mi", H, x)     # d h_i / d x
        Hx = np.einsum("mij,j->im", H, x)           # d (Q x) / d lam
        top = np.hstack([Jh, np.zeros((p.m, p.m))])
        bottom = np.hstack([Q, Hx])
        step, *_ = np.linalg.lstsq(np.vstack([top, bottom]), -r, rcond=None)
        x = x + step[:p.N]
        lam = lam + step[p.N:]
        rn = float(np.linalg.norm(residual(x, lam)[0]))
        if rn < best_norm:
            best_x, best_lam, best_norm = x.copy(), lam.copy(), rn
        if rn < 1e-14 * (1.0 + np.linalg.norm(x) ** 2):
            break
    return best_x, best_lam


def certify_instance(p: HomQCQP, theta, settings: CertifySettings | None = None,
                     oracle_value: float | None = None) -> GapCertificate:
    """Certify a single homogeneous instance (theta is carried for reporting)."""
    st = settings or CertifySettings()
    theta = np.asarray(theta, dtype=float).reshape(-1)
    t0 = time.perf_counter()
    res = solve_sdp(build_relaxation(p), st.sdp)
    solve_time = time.perf_counter() - t0

    lam = dual_multipliers(res)
    Q = lagrangian_hessian(p, lam)
    corank_ok, nu2 = check_corank_one(Q, st.rank_tol)
    corank_Q = p.N - numerical_rank(Q, st.rank_tol)
    rank_S = numerical_rank(res.S, st.rank_tol)

    usable = res.status == STATUS_OPTIMAL or (
        max(res.residuals[0], res.residuals[1]) <= st.usable_residual
        and res.residuals[2] <= st.usable_residual
    )

    x_hat = None
    pval_candidate = None
    gap_abs = None
    gap_rel = None
    conditions = {"feasible": False, "multiplier": False, "psd": False,
                  "corank_one": bool(corank_ok)}
    verdict = VERDICT_INCONCLUSIVE

    if usable:
        x_hat = extract_rank_one(res.S, st.ratio_tol, hom_index=p.hom_index)
        if x_hat is not None:
            x_hat, lam = _kkt_polish(p, x_hat, lam)
            Q = lagrangian_hessian(p, lam)
            corank_ok, nu2 = check_corank_one(Q, st.rank_tol)
            corank_Q = p.N - numerical_rank(Q, st.rank_tol)
            conditions["corank_one"] = bool(corank_ok)
            feas, stat, psd_slack = kkt_residuals(p, x_hat, lam)
            xscale = 1.0 + float(x_hat @ x_hat)
            qscale = max(1.0, float(np.linalg.norm(Q)))
            conditions["feasible"] = feas <= st.feas_tol * xscale
            conditions["multiplier"] = stat <= st.feas_tol * qscale * np.sqrt(xscale)
            conditions["psd"] = psd_slack >= -st.rank_tol * qscale
            pval_candidate = p.objective_value(x_hat)
            gap_abs = pval_candidate - res.dval
            gap_rel = gap_abs / (1.0 + abs(res.dval))

        if x_hat is not None and conditions["feasible"] and gap_rel is not None \
                and gap_rel <= st.gap_tol:
            verdict = VERDICT_TIGHT if corank_ok else VERDICT_DEGENERATE
        else:
            margin = st.gap_positive_margin * st.gap_tol
            if oracle_value is not None:
                oracle_gap = (oracle_value - res.dval) / (1.0 + abs(res.dval))
                if oracle_gap > margin:
                    verdict = VERDICT_GAP
                    if pval_candidate is None:
                        pval_candidate = float(oracle_value)
                        gap_abs = pval_candidate - res.dval
                        gap_rel = oracle_gap
                elif x_hat is None and abs(oracle_gap) <= st.gap_tol:
                    # gap certified through the oracle, but no rank-one recovery
                    verdict = VERDICT_DEGENERATE
                    pval_candidate = float(oracle_value)
                    gap_abs = pval_candidate - res.dval
                    gap_rel = oracle_gap
            if verdict == VERDICT_INCONCLUSIVE and x_hat is not None \
                    and conditions["feasible"] and gap_rel is not None and gap_rel > margin:
                verdict = VERDICT_GAP

    return GapCertificate(
        theta=theta,
        dval=res.dval,
        pval_candidate=pval_candidate,
        gap_abs=gap_abs,
        gap_rel=gap_rel,
        lam=lam,
        corank_Q=corank_Q,
        nu2=nu2,
        x_hat=x_hat,
        rank_S=rank_S,
        conditions=conditions,
        verdict=verdict,
        solver_status=res.status,
        solver_residuals=res.residuals,
        solver_iterations=res.iterations,
        solve_time=solve_time,
    )


def certify_gap(fam: ParametricProblem, theta, settings: CertifySettings | None = None,
                oracle_value: float | None = None, use_oracle: bool = True) -> GapCertificate:
    """Instantiate the family at theta and certify.

    When no independent primal value is supplied and the family carries an
    oracle, it is consulted automatically (use_oracle=False disables that).
    """
    theta = fam.check_theta(theta)
    p = fam.instantiate(theta)
    if oracle_value is None and use_oracle and fam.oracle is not None:
        oracle_value = float(fam.oracle(theta))
    return certify_instance(p, theta, settings, oracle_value)
