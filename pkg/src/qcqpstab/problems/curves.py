"""Nearest-point problems to plane/space cubic curves.

Three families: the twisted cubic (y2 = y1^2, y3 = y1*y2), an intentionally
badly formulated version of the same problem whose dual value is always
zero, and the cuspidal cubic y2^2 = y1^3 lifted with an auxiliary variable.
"""

from __future__ import annotations

import numpy as np

from ..model import AffineView, HomQCQP, HomQuadratic, ParametricProblem, QuadraticForm, homogenize


def _golden_refine(f, lo, hi, iters=200):
    """Golden-section minimization of a unimodal bracket."""
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
        if b - a < 1e-14 * (1.0 + abs(a) + abs(b)):
            break
    t = 0.5 * (a + b)
    return t, f(t)


def _curve_nearest(f, radius, grid_points=4001):
    """Dense 1-D scan over [-radius, radius] followed by local refinement."""
    ts = np.linspace(-radius, radius, grid_points)
    vals = f(ts)
    k = int(np.argmin(vals))
    lo = ts[max(k - 1, 0)]
    hi = ts[min(k + 1, len(ts) - 1)]
    return _golden_refine(lambda t: float(f(np.array([t]))[0]), lo, hi)


# ---------------------------------------------------------------------------
# twisted cubic

def twisted_cubic_point(t: float) -> tuple[np.ndarray, np.ndarray]:
    """(theta_bar, x_bar) for the on-curve parameter (t, t^2, t^3)."""
    theta = np.array([t, t * t, t ** 3], dtype=float)
    return theta, np.concatenate([[1.0], theta])


def twisted_cubic_nearest(theta) -> tuple[float, float]:
    """(t*, squared distance) of the nearest curve point to theta."""
    theta = np.asarray(theta, dtype=float).reshape(-1)

    def dist2(ts):
        return (ts - theta[0]) ** 2 + (ts ** 2 - theta[1]) ** 2 + (ts ** 3 - theta[2]) ** 2

    radius = 1.0 + max(abs(theta[0]), abs(theta[1]) ** 0.5, abs(theta[2]) ** (1.0 / 3.0))
    return _curve_nearest(dist2, radius)


def _twisted_constraints() -> tuple[QuadraticForm, ...]:
    P1 = np.zeros((3, 3))
    P1[0, 0] = -1.0
    f1 = QuadraticForm(P1, np.array([0.0, 1.0, 0.0]), 0.0)  # y2 - y1^2
    P2 = np.zeros((3, 3))
    P2[0, 1] = P2[1, 0] = -0.5
    f2 = QuadraticForm(P2, np.array([0.0, 0.0, 1.0]), 0.0)  # y3 - y1*y2
    return (f1, f2)


def twisted_cubic() -> ParametricProblem:
    """Nearest point to the twisted cubic; variables x = (z0, y1, y2, y3)."""
    cons = _twisted_constraints()

    def objective(theta):
        theta = np.asarray(theta, dtype=float)
        return QuadraticForm(np.eye(3), -2.0 * theta, float(theta @ theta))

    def instantiate(theta):
        return homogenize(objective(theta), cons)

    def affine_view(theta):
        return AffineView(objective(theta), cons, dim_variety=1)

    def ground_truth(rng):
        t = float(rng.uniform(-1.5, 1.5))
        return twisted_cubic_point(t)

    return ParametricProblem(
        name="twisted-cubic",
        d=3,
        instantiate=instantiate,
        affine_view=affine_view,
        theta_independent_feasible_set=True,
        ground_truth=ground_truth,
        z_indices=(0,),
        oracle=lambda theta: twisted_cubic_nearest(theta)[1],
        theta_doc="target point in R^3",
    )


def twisted_cubic_bad() -> ParametricProblem:
    """Badly formulated twisted-cubic nearest point: non-informative dual.

    Variables x = (z0, z1, z2, y1, y2, y3).  The auxiliary pair (z1, z2)
    lives on the unit circle and annihilates the columns of
    [[z0, y1, y2], [y1, y2, y3]], which forces y onto the curve while the
    dual value stays 0 for every theta.
    """
    N = 6
    Z0, Z1, Z2, Y1, Y2, Y3 = range(6)

    def sym_entry(pairs):
        # pairs carry monomial coefficients: v * x_i * x_j
        H = np.zeros((N, N))
        for i, j, v in pairs:
            if i == j:
                H[i, i] += v
            else:
                H[i, j] += 0.5 * v
                H[j, i] += 0.5 * v
        return H

    h0 = HomQuadratic(sym_entry([(Z0, Z0, 1.0)]), -1.0)          # z0^2 = 1
    h1 = HomQuadratic(sym_entry([(Z1, Z1, 1.0), (Z2, Z2, 1.0)]), -1.0)  # z1^2+z2^2 = 1
    c1 = HomQuadratic(sym_entry([(Z1, Z0, 1.0), (Z2, Y1, 1.0)]), 0.0)   # z1*z0 + z2*y1
    c2 = HomQuadratic(sym_entry([(Z1, Y1, 1.0), (Z2, Y2, 1.0)]), 0.0)   # z1*y1 + z2*y2
    c3 = HomQuadratic(sym_entry([(Z1, Y2, 1.0), (Z2, Y3, 1.0)]), 0.0)   # z1*y2 + z2*y3
    cons = (h0, h1, c1, c2, c3)

    def instantiate(theta):
        theta = np.asarray(theta, dtype=float)
        G = np.zeros((N, N))
        G[Z0, Z0] = float(theta @ theta)
        for k, yk in enumerate((Y1, Y2, Y3)):
            G[Z0, yk] = G[yk, Z0] = -theta[k]
            G[yk, yk] = 1.0
        return HomQCQP(N=N, G=G, constraints=cons, hom_index=0)

    def affine_view(theta):
        # affine coordinates (z1, z2, y1, y2, y3)
        theta = np.asarray(theta, dtype=float)
        n = 5
        P = np.zeros((n, n))
        P[2:, 2:] = np.eye(3)
        q = np.concatenate([[0.0, 0.0], -2.0 * theta])
        obj = QuadraticForm(P, q, float(theta @ theta))

        def aff(H, b):
            return QuadraticForm(H[1:, 1:], 2.0 * H[0, 1:], H[0, 0] + b)

        return AffineView(obj, tuple(aff(c.H, c.b) for c in cons[1:]), dim_variety=1)

    def ground_truth(rng):
        t = float(rng.uniform(-1.5, 1.5))
        theta, _ = twisted_cubic_point(t)
        z2 = 1.0 / np.sqrt(1.0 + t * t)
        x = np.array([1.0, -t * z2, z2, t, t * t, t ** 3])
        return theta, x

    return ParametricProblem(
        name="twisted-cubic-bad",
        d=3,
        instantiate=instantiate,
        affine_view=affine_view,
        theta_independent_feasible_set=True,
        ground_truth=ground_truth,
        z_indices=(0, 1, 2),
        oracle=lambda theta: twisted_cubic_nearest(theta)[1],
        theta_doc="target point in R^3",
    )


# ---------------------------------------------------------------------------
# cuspidal cubic y2^2 = y1^3, lifted with one auxiliary variable

def cuspidal_cubic_point(t: float) -> tuple[np.ndarray, np.ndarray]:
    """(theta_bar, x_bar) with theta_bar = (t^2, t^3), x_bar = (1, t, t^2, t^3)."""
    theta = np.array([t * t, t ** 3], dtype=float)
    return theta, np.array([1.0, t, t * t, t ** 3])


def cuspidal_cubic_nearest(theta) -> tuple[float, float]:
    theta = np.asarray(theta, dtype=float).reshape(-1)

    def dist2(ts):
        return (ts ** 2 - theta[0]) ** 2 + (ts ** 3 - theta[1]) ** 2

    radius = 1.0 + max(abs(theta[0]) ** 0.5, abs(theta[1]) ** (1.0 / 3.0))
    return _curve_nearest(dist2, radius)


def _cuspidal_constraints() -> tuple[QuadraticForm, ...]:
    # affine coordinates (z1, y1, y2)
    P1 = np.zeros((3, 3))
    P1[0, 1] = P1[1, 0] = -0.5
    f1 = QuadraticForm(P1, np.array([0.0, 0.0, 1.0]), 0.0)  # y2 - y1*z1
    P2 = np.zeros((3, 3))
    P2[0, 0] = -1.0
    f2 = QuadraticForm(P2, np.array([0.0, 1.0, 0.0]), 0.0)  # y1 - z1^2
    P3 = np.zeros((3, 3))
    P3[0, 2] = P3[2, 0] = 0.5
    P3[1, 1] = -1.0
    f3 = QuadraticForm(P3, np.zeros(3), 0.0)                # y2*z1 - y1^2
    return (f1, f2, f3)


def cuspidal_cubic() -> ParametricProblem:
    """Nearest point to y2^2 = y1^3; variables x = (z0, z1, y1, y2)."""
    cons = _cuspidal_constraints()

    def objective(theta):
        theta = np.asarray(theta, dtype=float)
        P = np.zeros((3, 3))
        P[1, 1] = P[2, 2] = 1.0
        q = np.array([0.0, -2.0 * theta[0], -2.0 * theta[1]])
        return QuadraticForm(P, q, float(theta @ theta))

    def instantiate(theta):
        return homogenize(objective(theta), cons)

    def affine_view(theta):
        return AffineView(objective(theta), cons, dim_variety=1)

    def ground_truth(rng):
        t = float(rng.uniform(0.25, 1.75))
        return cuspidal_cubic_point(t)

    return ParametricProblem(
        name="cuspidal-cubic",
        d=2,
        instantiate=instantiate,
        affine_view=affine_view,
        theta_independent_feasible_set=True,
        ground_truth=ground_truth,
        z_indices=(0, 1),
        oracle=lambda theta: cuspidal_cubic_nearest(theta)[1],
        theta_doc="target point in R^2",
    )


def cuspidal_null_multipliers(t: float) -> np.ndarray:
    """The constraint-gradient null combination (0, t, -t^2, -1) at the
    on-curve point with parameter t."""
    return np.array([0.0, t, -t * t, -1.0])
