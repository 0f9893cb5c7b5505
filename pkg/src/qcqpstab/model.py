"""Affine and homogeneous QCQP models.

An affine quadratic is f(y) = y'Py + q'y + r.  Homogenization introduces a
coordinate z0 with z0^2 = 1 and completes every term to degree two, so the
homogeneous problem reads

    min  x'Gx   s.t.  x'H_i x + b_i = 0,  i = 1..m,

with x = (z0, y).  All generators in this package place z0 first and keep
the z0^2 = 1 constraint at position 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError
from .linalg import as_matrix, pseudo_inverse, sym, sym_eig


@dataclass(frozen=True)
class QuadraticForm:
    """Affine quadratic y -> y'Py + q'y + r with P stored exactly symmetric."""

    P: np.ndarray
    q: np.ndarray
    r: float

    def __post_init__(self):
        P = sym(self.P)
        q = np.asarray(self.q, dtype=float).reshape(-1)
        if not np.all(np.isfinite(q)) or not np.isfinite(self.r):
            raise InvalidInputError("quadratic form has non-finite data")
        if q.shape[0] != P.shape[0]:
            raise InvalidInputError("dimension mismatch between P and q")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", float(self.r))

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def value(self, y) -> float:
        y = np.asarray(y, dtype=float).reshape(-1)
        return float(y @ self.P @ y + self.q @ y + self.r)

    def gradient(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(-1)
        return 2.0 * (self.P @ y) + self.q

    @property
    def hessian(self) -> np.ndarray:
        return 2.0 * self.P


@dataclass(frozen=True)
class HomQuadratic:
    """Homogeneous quadratic x -> x'Hx + b (even in x by construction)."""

    H: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "H", sym(self.H))
        object.__setattr__(self, "b", float(self.b))
        if not np.isfinite(self.b):
            raise InvalidInputError("constraint constant is non-finite")

    @property
    def n(self) -> int:
        return self.H.shape[0]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(x @ self.H @ x + self.b)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        return 2.0 * (self.H @ x)


@dataclass(frozen=True)
class HomQCQP:
    """Homogeneous QCQP instance: objective matrix G plus equality constraints.

    At least one constraint must carry a nonzero constant b (otherwise x = 0
    is feasible and certificates degenerate); such instances are rejected.
    """

    N: int
    G: np.ndarray
    constraints: tuple[HomQuadratic, ...]
    hom_index: Optional[int] = 0
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        G = sym(self.G)
        if G.shape != (self.N, self.N):
            raise InvalidInputError("objective matrix has wrong shape")
        cons = tuple(self.constraints)
        if not cons:
            raise InvalidInputError("need at least one constraint")
        for c in cons:
            if c.H.shape != (self.N, self.N):
                raise InvalidInputError("constraint matrix has wrong shape")
        if all(c.b == 0.0 for c in cons):
            raise InvalidInputError("all constraint constants vanish; x = 0 is feasible")
        if self.hom_index is not None and not (0 <= self.hom_index < self.N):
            raise InvalidInputError("hom_index out of range")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "constraints", cons)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def objective_value(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(x @ self.G @ x)

    def constraint_values(self, x) -> np.ndarray:
        return np.array([c.value(x) for c in self.constraints])

    def constraint_matrices(self) -> np.ndarray:
        """Stacked (m, N, N) array of the H_i."""
        return np.stack([c.H for c in self.constraints])

    def constants(self) -> np.ndarray:
        return np.array([c.b for c in self.constraints])


@dataclass(frozen=True)
class AffineView:
    """Affine-coordinates view of a lifted problem: objective, constraints,
    and the declared local dimension of the variety (never inferred)."""

    objective: QuadraticForm
    constraints: tuple[QuadraticForm, ...]
    dim_variety: int

    @property
    def n(self) -> int:
        return self.objective.n

    def jacobian(self, y) -> np.ndarray:
        """Rows are gradients of the constraints at y (m x n)."""
        return np.array([f.gradient(y) for f in self.constraints])

    @property
    def is_nearest_point_form(self) -> bool:
        """True when the objective is ||y - theta||^2, i.e. P is the identity."""
        return bool(np.array_equal(self.objective.P, np.eye(self.n)))


@dataclass(frozen=True)
class ParametricProblem:
    """A parametric QCQP family: theta -> HomQCQP, plus optional metadata.

    instantiate must be a pure function of theta; scan workers call it
    concurrently.  ground_truth(rng) returns a zero-duality-gap parameter
    and the matching primal point (theta_bar, x_bar).
    """

    name: str
    d: int
    instantiate: Callable[[np.ndarray], HomQCQP]
    affine_view: Optional[Callable[[np.ndarray], AffineView]] = None
    theta_independent_feasible_set: bool = True
    ground_truth: Optional[Callable[[np.random.Generator], tuple[np.ndarray, np.ndarray]]] = None
    z_indices: Optional[tuple[int, ...]] = None
    oracle: Optional[Callable[[np.ndarray], float]] = None
    theta_doc: str = ""

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape[0] != self.d:
            raise InvalidInputError(
                f"problem '{self.name}' expects {self.d} parameters, got {theta.shape[0]}"
            )
        if not np.all(np.isfinite(theta)):
            raise InvalidInputError("theta contains non-finite entries")
        return theta


def homogenize(objective: QuadraticForm, constraints) -> HomQCQP:
    """Degree-2 completion with x = (z0, y); z0^2 = 1 is appended first.

    Constant terms become r*z0^2 inside the matrices, so every homogenized
    constraint has b = 0 and only the adjoined z0^2 = 1 carries b = -1.
    """
    constraints = tuple(constraints)
    n = objective.n
    for f in constraints:
        if f.n != n:
            raise InvalidInputError("constraint dimension mismatch")
    N = n + 1

    def lift(f: QuadraticForm) -> np.ndarray:
        H = np.zeros((N, N))
        H[0, 0] = f.r
        H[0, 1:] = 0.5 * f.q
        H[1:, 0] = 0.5 * f.q
        H[1:, 1:] = f.P
        return H

    hom_constraints = [HomQuadratic(_unit_corner(N), -1.0)]
    hom_constraints += [HomQuadratic(lift(f), 0.0) for f in constraints]
    return HomQCQP(N=N, G=lift(objective), constraints=tuple(hom_constraints), hom_index=0)


def _unit_corner(N: int) -> np.ndarray:
    H = np.zeros((N, N))
    H[0, 0] = 1.0
    return H


def lagrangian_hessian(p: HomQCQP, lam) -> np.ndarray:
    """G + sum(lam_i * H_i); the PSD certificate matrix of the dual."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.shape[0] != p.m:
        raise InvalidInputError(f"expected {p.m} multipliers, got {lam.shape[0]}")
    Q = p.G.copy()
    for li, c in zip(lam, p.constraints):
        Q = Q + li * c.H
    return sym(Q)


def kkt_residuals(p: HomQCQP, x, lam) -> tuple[float, float, float]:
    """(max |h_i(x)|, ||Q(lam) x||_2, min eigenvalue of Q(lam))."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != p.N:
        raise InvalidInputError("point has wrong dimension")
    Q = lagrangian_hessian(p, lam)
    feas = float(np.max(np.abs(p.constraint_values(x))))
    stat = float(np.linalg.norm(Q @ x))
    psd_slack = float(sym_eig(Q).values[0])
    return feas, stat, psd_slack


def affine_multiplier(grad_q, jacobian, tol: float = 1e-7) -> tuple[np.ndarray, float]:
    """Least-norm mu with mu' J = -grad_q, plus the residual ||J' mu + grad_q||.

    A nonzero residual signals that no multiplier exists (the equation is
    inconsistent); callers decide how to react.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    grad_q = np.asarray(grad_q, dtype=float).reshape(-1)
    J = as_matrix(jacobian, "jacobian")
    if J.shape[1] != grad_q.shape[0]:
        raise InvalidInputError("jacobian/gradient dimension mismatch")
    mu = -pseudo_inverse(J.T, tol) @ grad_q
    residual = float(np.linalg.norm(J.T @ mu + grad_q))
    return mu, residual


def lift_multiplier(p: HomQCQP, x, mu) -> np.ndarray:
    """Affine multiplier mu -> homogeneous (lam0, mu) with lam0 = -g(x)."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.shape[0] != p.m - 1:
        raise InvalidInputError(f"expected {p.m - 1} affine multipliers, got {mu.shape[0]}")
    lam0 = -p.objective_value(x)
    return np.concatenate([[lam0], mu])


# ---------------------------------------------------------------------------
# serialization: {N, G row-major, constraints: [{H, b}], hom_index}

def problem_to_dict(p: HomQCQP) -> dict:
    return {
        "N": p.N,
        "G": [float(v) for v in p.G.reshape(-1)],
        "constraints": [
            {"H": [float(v) for v in c.H.reshape(-1)], "b": float(c.b)} for c in p.constraints
        ],
        "hom_index": p.hom_index,
    }


def problem_from_dict(d: dict) -> HomQCQP:
    N = int(d["N"])
    G = np.array(d["G"], dtype=float).reshape(N, N)
    cons = tuple(
        HomQuadratic(np.array(c["H"], dtype=float).reshape(N, N), float(c["b"]))
        for c in d["constraints"]
    )
    return HomQCQP(N=N, G=G, constraints=cons, hom_index=d.get("hom_index"))


def problem_to_json(p: HomQCQP) -> str:
    return json.dumps(problem_to_dict(p))


def problem_from_json(text: str) -> HomQCQP:
    return problem_from_dict(json.loads(text))
