import numpy as np

from qcqpstab.certify import (
    CertifySettings,
    VERDICT_DEGENERATE,
    VERDICT_GAP,
    VERDICT_INCONCLUSIVE,
    VERDICT_TIGHT,
    certify_gap,
    check_corank_one,
)
from qcqpstab.model import kkt_residuals, lagrangian_hessian, lift_multiplier
from qcqpstab.problems import (
    rank_one_approximation,
    twisted_cubic,
    twisted_cubic_bad,
    twisted_cubic_point,
)


def test_certify_on_curve_point():
    fam = twisted_cubic()
    cert = certify_gap(fam, np.array([1.0, 1.0, 1.0]))
    assert cert.verdict == VERDICT_TIGHT
    assert cert.gap_rel <= 1e-6
    np.testing.assert_allclose(np.abs(cert.x_hat), [1.0, 1.0, 1.0, 1.0], atol=1e-6)
    assert all(cert.conditions.values())


def test_certify_bad_formulation_gap():
    fam = twisted_cubic_bad()
    cert = certify_gap(fam, np.array([0.0, 0.0, 0.5]))
    assert abs(cert.dval) <= 1e-6
    assert cert.verdict == VERDICT_GAP
    assert abs(cert.pval_candidate - 0.25) <= 1e-6  # squared distance to the curve


def test_certify_rank_one_matrix_target():
    fam = rank_one_approximation((2, 2))
    theta = np.array([1.0, 0.0, 0.0, 0.0])  # diag(1, 0) flattened
    cert = certify_gap(fam, theta)
    assert cert.verdict == VERDICT_TIGHT
    np.testing.assert_allclose(cert.x_hat[1:], theta, atol=1e-7)


def test_check_corank_one_cases():
    ok, nu2 = check_corank_one(np.diag([0.0, 1.0, 5.0]))
    assert ok and abs(nu2 - 1.0) < 1e-12
    ok, nu2 = check_corank_one(np.diag([0.0, 0.0, 1.0]))
    assert not ok and abs(nu2) < 1e-12
    # Lagrangian Hessian of a strictly convex nearest-point problem
    theta, xbar = twisted_cubic_point(1.0)
    p = twisted_cubic().instantiate(theta)
    Q = lagrangian_hessian(p, lift_multiplier(p, xbar, np.zeros(2)))
    ok, nu2 = check_corank_one(Q)
    assert ok and nu2 > 0.1


def test_certificate_soundness():
    fam = twisted_cubic()
    st = CertifySettings()
    rng = np.random.default_rng(0)
    for _ in range(10):
        t = rng.uniform(-1.5, 1.5)
        theta, _ = twisted_cubic_point(t)
        theta = theta + 0.05 * rng.standard_normal(3)
        cert = certify_gap(fam, theta, st)
        if cert.verdict != VERDICT_TIGHT:
            continue
        p = fam.instantiate(theta)
        feas, stat, psd = kkt_residuals(p, cert.x_hat, cert.lam)
        scale = 1.0 + float(cert.x_hat @ cert.x_hat)
        assert feas <= 10 * st.feas_tol * scale
        assert stat <= 10 * st.feas_tol * scale
        assert psd >= -10 * st.feas_tol * scale


def test_sign_canonicalization_deterministic():
    fam = twisted_cubic()
    theta = np.array([0.3, 0.2, -0.4])
    c1 = certify_gap(fam, theta)
    c2 = certify_gap(fam, theta)
    assert c1.verdict == c2.verdict
    np.testing.assert_array_equal(c1.x_hat, c2.x_hat)
    np.testing.assert_array_equal(c1.lam, c2.lam)


def test_monotone_gap_tolerance():
    fam = twisted_cubic_bad()
    theta = np.array([0.05, 0.0, 0.1])  # small but positive oracle distance
    loose = certify_gap(fam, theta, CertifySettings(gap_tol=1e-1))
    strict = certify_gap(fam, theta, CertifySettings(gap_tol=1e-6))
    # loosening can move inconclusive verdicts toward tight, never tight -> gap
    assert strict.verdict in (VERDICT_GAP, VERDICT_INCONCLUSIVE, VERDICT_DEGENERATE)
    if strict.verdict == VERDICT_TIGHT:
        assert loose.verdict != VERDICT_GAP
    assert loose.verdict in (VERDICT_TIGHT, VERDICT_DEGENERATE, VERDICT_INCONCLUSIVE)


def test_certificate_serializes():
    cert = certify_gap(twisted_cubic(), np.array([1.0, 1.0, 1.0]))
    d = cert.to_dict()
    assert d["verdict"] == VERDICT_TIGHT
    assert isinstance(d["conditions"]["feasible"], bool)
    assert len(d["lambda"]) == 3
    import json

    json.dumps(d)
