import math

import numpy as np
import pytest

from qcqpstab.errors import FinslerHypothesisError, InvalidInputError
from qcqpstab.model import lagrangian_hessian, lift_multiplier
from qcqpstab.problems import (
    cuspidal_cubic,
    cuspidal_cubic_point,
    cuspidal_null_multipliers,
    twisted_cubic,
    twisted_cubic_bad,
    twisted_cubic_point,
)
from qcqpstab.stability import (
    assess_R2,
    branch_point_check,
    check_acq,
    finsler_perturb,
    homogeneous_jacobian,
    multiplier_perturbation,
    operator_norm_M,
    regularity_matrix_check,
    restricted_slater,
    restriction_matrix_A,
    stability_radius,
    stability_report,
)


def test_check_acq_twisted_cubic_origin():
    J = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    res = check_acq(J, dim_variety=1)
    assert res.s == 2 and abs(res.sigma_s - 1.0) < 1e-12 and res.holds


def test_check_acq_fails_for_nonradical_description():
    # (y1 - y2)^2 = 0 has zero gradient at the origin
    res = check_acq(np.zeros((1, 2)), dim_variety=1)
    assert not res.holds


def test_check_acq_sphere():
    n = 4
    J = np.zeros((1, n))
    J[0, 0] = 2.0  # gradient of |y|^2 - 1 at e1
    res = check_acq(J, dim_variety=n - 1)
    assert res.holds and abs(res.sigma_s - 2.0) < 1e-12


def test_check_acq_validates_dimension():
    with pytest.raises(InvalidInputError):
        check_acq(np.zeros((1, 2)), dim_variety=5)


def test_operator_norm_single_identity_hessian():
    assert abs(operator_norm_M([2.0 * np.eye(2)]) - math.sqrt(2.0)) < 1e-12


def test_operator_norm_linear_constraints():
    assert operator_norm_M([np.zeros((3, 3)), np.zeros((3, 3))]) == 0.0


def test_operator_norm_twisted_cubic():
    view = twisted_cubic().affine_view(np.zeros(3))
    M = operator_norm_M([f.hessian for f in view.constraints])
    assert abs(M - 1.0) <= 1e-9


def test_stability_radius_modes():
    cor = stability_radius(sigma_s=1.0, M=1.0, mode="corollary")
    assert abs(cor.value - 0.5) <= 1e-12 and not cor.degenerate
    thm = stability_radius(nu2=1.0, K=2.0, L=0.0, M=1.0, mode="theorem")
    assert abs(thm.value - cor.value) <= 1e-12
    degen = stability_radius(nu2=1.0, K=0.0, L=0.0, M=1.0, mode="theorem")
    assert degen.degenerate and math.isinf(degen.value)
    with pytest.raises(InvalidInputError):
        stability_radius(mode="theorem")


def test_restricted_slater_cuspidal():
    fam = cuspidal_cubic()
    for t in (0.5, 1.0, 2.0):
        theta, xbar = cuspidal_cubic_point(t)
        p = fam.instantiate(theta)
        Q = lagrangian_hessian(p, lift_multiplier(p, xbar, np.zeros(3)))
        rs = restricted_slater(p, xbar, Q)
        assert rs.holds and rs.V_dim == 1
        # the recovered direction matches the hand multiplier up to scale
        mu_ref = cuspidal_null_multipliers(t)
        cos = abs(rs.mu_star @ mu_ref) / (np.linalg.norm(rs.mu_star) * np.linalg.norm(mu_ref))
        assert cos > 1.0 - 1e-6


def test_restricted_slater_fails_for_bad_formulation():
    fam = twisted_cubic_bad()
    theta, xbar = fam.ground_truth(np.random.default_rng(0))
    p = fam.instantiate(theta)
    Q = lagrangian_hessian(p, np.zeros(p.m))
    rs = restricted_slater(p, xbar, Q)
    assert not rs.holds and rs.V_dim > 0


def test_restricted_slater_vacuous_for_corank_one():
    theta, xbar = twisted_cubic_point(1.0)
    p = twisted_cubic().instantiate(theta)
    Q = lagrangian_hessian(p, lift_multiplier(p, xbar, np.zeros(2)))
    rs = restricted_slater(p, xbar, Q)
    assert rs.holds and rs.V_dim == 0 and math.isinf(rs.t_star)


def test_restriction_matrix_cuspidal_closed_form():
    fam = cuspidal_cubic()
    for t in (0.5, 1.0, 2.0):
        theta, _ = cuspidal_cubic_point(t)
        p = fam.instantiate(theta)
        A = restriction_matrix_A(p, cuspidal_null_multipliers(t), (0, 1))
        expected = np.array([[t ** 4, -(t ** 3)], [-(t ** 3), t * t]])
        np.testing.assert_allclose(A, expected, atol=1e-12)
        zeta = np.array([t, -1.0])
        assert abs(zeta @ A @ zeta - t * t * (t * t + 1) ** 2) <= 1e-8


def test_restriction_matrix_zero_and_linearity():
    fam = cuspidal_cubic()
    theta, _ = cuspidal_cubic_point(1.3)
    p = fam.instantiate(theta)
    np.testing.assert_array_equal(restriction_matrix_A(p, np.zeros(4), (0, 1)),
                                  np.zeros((2, 2)))
    rng = np.random.default_rng(1)
    mu1, mu2 = rng.standard_normal(4), rng.standard_normal(4)
    a, b = 0.7, -2.1
    lhs = restriction_matrix_A(p, a * mu1 + b * mu2, (0, 1))
    rhs = a * restriction_matrix_A(p, mu1, (0, 1)) + b * restriction_matrix_A(p, mu2, (0, 1))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_restriction_matrix_validates_indices():
    p = cuspidal_cubic().instantiate(np.array([1.0, 1.0]))
    with pytest.raises(InvalidInputError):
        restriction_matrix_A(p, np.zeros(4), (1, 2))  # missing hom coordinate
    with pytest.raises(InvalidInputError):
        restriction_matrix_A(p, np.zeros(3), (0, 1))  # wrong multiplier length


def test_finsler_basic_cases():
    t = finsler_perturb(np.diag([0.0, 1.0]), np.diag([1.0, 0.0]))
    assert abs(t - 1e-8) < 1e-20
    with pytest.raises(FinslerHypothesisError):
        finsler_perturb(np.diag([0.0, 1.0]), np.diag([-1.0, 1.0]))


def test_multiplier_perturbation_lemma():
    fam = cuspidal_cubic()
    theta, xbar = cuspidal_cubic_point(1.0)
    p = fam.instantiate(theta)
    lam_bar = lift_multiplier(p, xbar, np.zeros(3))
    Q = lagrangian_hessian(p, lam_bar)
    rs = restricted_slater(p, xbar, Q)
    assert rs.holds
    pert = multiplier_perturbation(p, xbar, lam_bar, rs.mu_star)
    assert pert.corank_one and 0 < pert.t <= 1.0
    from qcqpstab.certify import check_corank_one

    ok, _ = check_corank_one(lagrangian_hessian(p, lam_bar + pert.t * rs.mu_star))
    assert ok


def test_branch_point_cuspidal():
    fam = cuspidal_cubic()
    for t, expected in ((0.0, True), (1.0, False)):
        theta, xbar = cuspidal_cubic_point(t)
        p = fam.instantiate(theta)
        Q = lagrangian_hessian(p, lift_multiplier(p, xbar, np.zeros(3)))
        res = branch_point_check(homogeneous_jacobian(p, xbar), Q)
        assert res.is_branch_point == expected


def test_branch_point_trivial_for_corank_one():
    theta, xbar = twisted_cubic_point(0.8)
    p = twisted_cubic().instantiate(theta)
    Q = lagrangian_hessian(p, lift_multiplier(p, xbar, np.zeros(2)))
    res = branch_point_check(homogeneous_jacobian(p, xbar), Q)
    assert not res.is_branch_point


def test_branch_point_matches_auxiliary_injectivity():
    # for a nearest-point lift, branch points are exactly where the gradient
    # with respect to the auxiliary variables loses injectivity
    fam = cuspidal_cubic()
    for t in (0.3, 1.0, 1.7):
        theta, xbar = cuspidal_cubic_point(t)
        p = fam.instantiate(theta)
        view = fam.affine_view(theta)
        J_aff = view.jacobian(xbar[1:])     # affine coords (z1, y1, y2)
        grad_z = J_aff[:, [0]]              # columns of the auxiliary variable
        injective = np.linalg.norm(grad_z) > 1e-9
        Q = lagrangian_hessian(p, lift_multiplier(p, xbar, np.zeros(3)))
        res = branch_point_check(homogeneous_jacobian(p, xbar), Q)
        assert res.is_branch_point == (not injective)


def test_regularity_matrix_cases():
    theta, xbar = twisted_cubic_point(1.0)
    p = twisted_cubic().instantiate(theta)
    Q = lagrangian_hessian(p, lift_multiplier(p, xbar, np.zeros(2)))
    J = homogeneous_jacobian(p, xbar)
    assert regularity_matrix_check(J, Q)
    assert regularity_matrix_check(np.vstack([J, J[0]]), Q)  # duplicate row dropped

    theta0, x0 = cuspidal_cubic_point(0.0)
    p0 = cuspidal_cubic().instantiate(theta0)
    Q0 = lagrangian_hessian(p0, lift_multiplier(p0, x0, np.zeros(3)))
    assert not regularity_matrix_check(homogeneous_jacobian(p0, x0), Q0)


def test_branch_point_brute_force_agreement():
    rng = np.random.default_rng(2)
    for _ in range(30):
        n, m = 5, 3
        J = rng.standard_normal((m, n))
        if rng.random() < 0.5:
            # engineer a shared kernel vector for J and Q
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            J = J - np.outer(J @ v, v)
            B = rng.standard_normal((n, n))
            Q = B @ B.T
            Q = Q - np.outer(Q @ v, v) - np.outer(v, Q @ v) \
                + np.outer(v, v) * float(v @ Q @ v)
            Q = 0.5 * (Q + Q.T)
        else:
            B = rng.standard_normal((n, n))
            Q = B @ B.T + 0.1 * np.eye(n)
        res = branch_point_check(J, Q)
        # brute force over the kernel basis of J
        _, s, vt = np.linalg.svd(J)
        r = int(np.sum(s > 1e-7 * max(1.0, s[0])))
        T = vt[r:].T
        if T.shape[1] == 0:
            brute = False
        else:
            sing = np.linalg.svd(Q @ T, compute_uv=False)
            brute = bool(sing[-1] <= 1e-7 * max(1.0, np.linalg.norm(Q, 2)))
        assert res.is_branch_point == brute
        # the block regularity matrix fails exactly at branch points
        assert regularity_matrix_check(J, Q) == (not brute)


def test_assess_r2():
    assert assess_R2(twisted_cubic()) == "holds_by_declaration"
    fam = twisted_cubic()
    from dataclasses import replace

    assert assess_R2(replace(fam, theta_independent_feasible_set=False)) == "unknown"


def test_stability_report_twisted_origin():
    rep = stability_report(twisted_cubic(), np.zeros(3))
    assert abs(rep.acq_sigma_s - 1.0) <= 1e-9
    assert abs(rep.M - 1.0) <= 1e-9
    assert abs(rep.radius_cor - 0.5) <= 1e-9
    assert rep.rs_holds and rep.rs_V_dim == 0
    assert not rep.is_branch_point
    assert rep.regularity_matrix_full_rank
    assert rep.r2 == "holds_by_declaration"
    d = rep.to_dict()
    import json

    json.dumps(d)


def test_stability_report_theorem_mode():
    rep = stability_report(twisted_cubic(), np.zeros(3), K=2.0, L=0.0)
    # nu2 = 1 at the origin, so the theorem radius matches the corollary
    assert abs(rep.radius_thm - rep.radius_cor) <= 1e-9


def test_stability_report_edm_quadrilateral():
    # the full regularity checklist holds at generic configurations and the
    # Slater SDP recovers the hand-built multiplier direction
    from qcqpstab.problems import (
        cm_null_multipliers,
        edm_1d,
        quadrilateral_missing_01,
        sample_generic_points,
        truth_from_points,
    )

    g = quadrilateral_missing_01()
    fam = edm_1d(g)
    for seed in range(3):
        t = sample_generic_points(np.random.default_rng(seed), 4)
        theta, xbar = truth_from_points(g, t)
        rep = stability_report(fam, theta, x_bar=xbar)
        assert rep.acq_holds and rep.rs_holds and rep.rs_V_dim == 1
        assert not rep.is_branch_point and rep.regularity_matrix_full_rank
        assert rep.radius_cor is None  # partially observed: not nearest-point form
        mu_ref = np.concatenate([[0.0], cm_null_multipliers(t)])
        cos = abs(rep.rs_mu_star @ mu_ref) / (
            np.linalg.norm(rep.rs_mu_star) * np.linalg.norm(mu_ref))
        assert cos > 1.0 - 1e-6
