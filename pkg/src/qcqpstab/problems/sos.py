"""Unconstrained polynomial minimization through its Gram-matrix QCQP.

A degree-2d polynomial p(z) is written x'Qx over the vector x of all
monomials of degree <= d; restricting x to actual monomial vectors is a
quadratic constraint set (the Veronese relations x_a x_b = x_c x_d whenever
the exponents match), and the Lagrangian dual of the resulting QCQP is the
classical sum-of-squares lower bound  max gamma : p - gamma SOS.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import comb

import numpy as np

from ..errors import InvalidInputError
from ..model import AffineView, ParametricProblem, QuadraticForm, homogenize


def _exponents(n: int, max_deg: int) -> list[tuple[int, ...]]:
    return sorted(a for a in product(range(max_deg + 1), repeat=n) if sum(a) <= max_deg)


@dataclass(frozen=True)
class MonomialBasis:
    """All monomials z^a with |a| <= d in n variables, lex-ordered exponents."""

    n: int
    d: int

    @property
    def exponents(self) -> list[tuple[int, ...]]:
        return _exponents(self.n, self.d)

    @property
    def size(self) -> int:
        return comb(self.n + self.d, self.d)

    def pair_classes(self) -> dict[tuple[int, ...], list[tuple[int, int]]]:
        """Map each degree-2d exponent to the basis index pairs producing it."""
        expo = self.exponents
        classes: dict[tuple[int, ...], list[tuple[int, int]]] = {}
        for i in range(len(expo)):
            for j in range(i, len(expo)):
                key = tuple(a + b for a, b in zip(expo[i], expo[j]))
                classes.setdefault(key, []).append((i, j))
        return classes

    def vector(self, z) -> np.ndarray:
        """Evaluate the monomial vector at the point z."""
        z = np.asarray(z, dtype=float).reshape(-1)
        return np.array([np.prod(z ** np.array(a)) for a in self.exponents])


def poly_exponents(n: int, two_d: int) -> list[tuple[int, ...]]:
    """Coefficient basis (lex exponents of degree <= 2d) for input polynomials."""
    return _exponents(n, two_d)


def poly_vector(coeffs: dict, n: int, two_d: int) -> np.ndarray:
    """Dense coefficient vector from an exponent->coefficient mapping."""
    expo = poly_exponents(n, two_d)
    index = {a: k for k, a in enumerate(expo)}
    out = np.zeros(len(expo))
    for a, c in coeffs.items():
        key = tuple(int(v) for v in a)
        if key not in index:
            raise InvalidInputError(f"monomial {key} out of the degree-{two_d} basis")
        out[index[key]] = float(c)
    return out


def gram_lift(basis: MonomialBasis, f) -> np.ndarray:
    """Minimum-Frobenius Gram matrix of a degree-2d coefficient vector.

    Each coefficient c of a monomial is split equally over all entries that
    can represent it: with one diagonal representative and k off-diagonal
    pairs the shared entry value is c / (1 + 2k) (off-diagonal entries count
    twice in x'Qx).  Monomials with no representation raise.
    """
    f = np.asarray(f, dtype=float).reshape(-1)
    expo2 = poly_exponents(basis.n, 2 * basis.d)
    if f.shape[0] != len(expo2):
        raise InvalidInputError(
            f"expected a coefficient vector of length {len(expo2)}")
    classes = basis.pair_classes()
    N = basis.size
    Q = np.zeros((N, N))
    for key, c in zip(expo2, f):
        if c == 0.0:
            continue
        reps = classes.get(key)
        if not reps:
            raise InvalidInputError(f"monomial {key} has no Gram representation")
        weight = sum(1 if i == j else 2 for i, j in reps)
        w = c / weight
        for i, j in reps:
            Q[i, j] += w
            if i != j:
                Q[j, i] += w
    return Q


def gram_eval(basis: MonomialBasis, Q) -> np.ndarray:
    """Coefficient vector of x'Qx (the forward map; inverse of gram_lift)."""
    Q = np.asarray(Q, dtype=float)
    expo2 = poly_exponents(basis.n, 2 * basis.d)
    index = {a: k for k, a in enumerate(expo2)}
    out = np.zeros(len(expo2))
    for key, reps in basis.pair_classes().items():
        acc = 0.0
        for i, j in reps:
            acc += Q[i, j] if i == j else 2.0 * Q[i, j]
        out[index[key]] = acc
    return out


def veronese_constraints(basis: MonomialBasis) -> tuple[QuadraticForm, ...]:
    """x_a x_b = x_c x_d for every exponent-sum class, against its first pair.

    Expressed over the affine coordinates y (all monomials except the
    constant), so products involving the constant monomial become linear or
    constant terms.
    """
    N = basis.size
    n_y = N - 1
    forms = []
    for key, reps in sorted(basis.pair_classes().items()):
        if len(reps) < 2:
            continue
        base = reps[0]
        for other in reps[1:]:
            P = np.zeros((n_y, n_y))
            q = np.zeros(n_y)
            r = 0.0
            for sign, (i, j) in ((1.0, other), (-1.0, base)):
                if i == 0 and j == 0:
                    r += sign
                elif i == 0:
                    q[j - 1] += sign
                else:
                    P[i - 1, j - 1] += 0.5 * sign
                    P[j - 1, i - 1] += 0.5 * sign
            forms.append(QuadraticForm(P, q, r))
    return tuple(forms)


def sos_unconstrained(n: int, two_d: int, coeff_map, reference_gram=None,
                      reference_coeffs=None, name: str = "sos",
                      ground_truth=None, max_basis: int = 40) -> ParametricProblem:
    """Family of Gram-matrix QCQPs for p_theta given by coeff_map(theta).

    When a reference Gram matrix is supplied the objective tracks
    gram_lift(p_theta - p_ref) + reference_gram, keeping the corank-one
    reference structure; otherwise gram_lift(p_theta) is used directly.
    coeff_map must return a dense coefficient vector over poly_exponents.
    The family's parameter dimension is probed with theta = 0.
    """
    if two_d % 2 != 0 or two_d < 2:
        raise InvalidInputError("two_d must be a positive even degree")
    basis = MonomialBasis(n, two_d // 2)
    if basis.size > max_basis:
        raise InvalidInputError(f"monomial basis too large ({basis.size} > {max_basis})")
    cons = veronese_constraints(basis)
    if reference_gram is not None and reference_coeffs is None:
        raise InvalidInputError("reference_gram needs reference_coeffs")

    def gram_of(theta):
        f = np.asarray(coeff_map(np.asarray(theta, dtype=float)), dtype=float)
        if reference_gram is not None:
            return gram_lift(basis, f - reference_coeffs) + reference_gram
        return gram_lift(basis, f)

    def objective(theta):
        Q = gram_of(theta)
        return QuadraticForm(Q[1:, 1:], 2.0 * Q[0, 1:], float(Q[0, 0]))

    def instantiate(theta):
        return homogenize(objective(theta), cons)

    def affine_view(theta):
        return AffineView(objective(theta), cons, dim_variety=n)

    return ParametricProblem(
        name=name,
        d=_probe_param_dim(coeff_map),
        instantiate=instantiate,
        affine_view=affine_view,
        theta_independent_feasible_set=True,
        ground_truth=ground_truth,
        z_indices=None,
        oracle=None,
        theta_doc="polynomial coefficient parameters",
    )


def _probe_param_dim(coeff_map) -> int:
    for k in (1, 2, 3, 4):
        try:
            coeff_map(np.zeros(k))
            return k
        except Exception:
            continue
    raise InvalidInputError("could not infer the parameter dimension of coeff_map")


def monomial_minimizer_truth(basis: MonomialBasis, theta, z_star):
    """(theta, x_bar) with x_bar the monomial vector of a known minimizer."""
    return np.asarray(theta, dtype=float).reshape(-1), basis.vector(z_star)


def sos_sextic() -> ParametricProblem:
    """p_theta = z1^4 z2^2 + z1^2 z2^4 + theta z1^2 z2^2 (degree 6, n = 2).

    Nonnegative for theta >= 0 with minimum 0 at the origin; for theta < 0
    no gamma makes p - gamma a sum of squares, so the relaxation becomes
    infeasible on the dual side.
    """
    n, two_d = 2, 6

    def coeff_map(theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape[0] != 1:
            raise InvalidInputError("expected one parameter")
        return poly_vector({(4, 2): 1.0, (2, 4): 1.0, (2, 2): float(theta[0])}, n, two_d)

    basis = MonomialBasis(n, two_d // 2)

    def ground_truth(rng):
        theta = np.array([float(rng.uniform(0.5, 2.0))])
        return monomial_minimizer_truth(basis, theta, np.zeros(2))

    def oracle(theta):
        t = float(np.asarray(theta).reshape(-1)[0])
        # p = z1^2 z2^2 (z1^2 + z2^2 + theta): zero on the axes when theta >= 0,
        # else minimized at z1^2 = z2^2 = -theta/3 with value theta^3/27
        return 0.0 if t >= 0 else t ** 3 / 27.0

    fam = sos_unconstrained(n, two_d, coeff_map, name="sos-sextic",
                            ground_truth=ground_truth)
    return ParametricProblem(
        name=fam.name, d=fam.d, instantiate=fam.instantiate,
        affine_view=fam.affine_view,
        theta_independent_feasible_set=fam.theta_independent_feasible_set,
        ground_truth=fam.ground_truth, z_indices=fam.z_indices,
        oracle=oracle, theta_doc=fam.theta_doc,
    )


def sos_quartic() -> ParametricProblem:
    """p_theta(z) = z^4 - theta z (univariate, degree 4).

    The global minimizer solves 4 z^3 = theta; the relaxation is exact for
    every theta, which makes this a convenient recovery fixture.
    """
    n, two_d = 1, 4

    def coeff_map(theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape[0] != 1:
            raise InvalidInputError("expected one parameter")
        return poly_vector({(4,): 1.0, (1,): -float(theta[0])}, n, two_d)

    basis = MonomialBasis(n, two_d // 2)

    def ground_truth(rng):
        theta = float(rng.uniform(1.0, 6.0))
        z = (theta / 4.0) ** (1.0 / 3.0)
        return monomial_minimizer_truth(basis, np.array([theta]), np.array([z]))

    def oracle(theta):
        t = float(np.asarray(theta).reshape(-1)[0])
        z = np.sign(t) * (abs(t) / 4.0) ** (1.0 / 3.0)
        return z ** 4 - t * z

    fam = sos_unconstrained(n, two_d, coeff_map, name="sos-quartic",
                            ground_truth=ground_truth)
    return ParametricProblem(
        name=fam.name, d=fam.d, instantiate=fam.instantiate,
        affine_view=fam.affine_view,
        theta_independent_feasible_set=fam.theta_independent_feasible_set,
        ground_truth=fam.ground_truth, z_indices=fam.z_indices,
        oracle=oracle, theta_doc=fam.theta_doc,
    )
