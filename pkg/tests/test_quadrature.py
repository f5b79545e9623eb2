import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy import special as sps

from fraclap import kernels, quadrature as q
from fraclap.special import DomainError, FracParams, c_const

S_GRID = (0.1, 0.25, 0.5, 0.75, 0.9)


@settings(max_examples=60)
@given(st.floats(-0.9, 2.0), st.floats(-0.9, 2.0), st.integers(0, 15))
def test_jacobi_exact_on_polynomials(a, b, k):
    t, w = q.gauss_jacobi01(8, a, b)
    assert np.sum(w * t**k) == pytest.approx(sps.beta(a + k + 1, b + 1), rel=1e-11)


def test_jacobi_rejects_nonintegrable():
    with pytest.raises(q.NonIntegrableError):
        q.gauss_jacobi01(8, -1.0, 0.0)


@pytest.mark.parametrize("s", S_GRID)
def test_beta_rule_mass(s):
    rule = q.beta_rule(s)
    assert rule.weights.sum() == pytest.approx(math.pi / math.sin(math.pi * s), abs=1e-10)
    assert np.all(np.diff(rule.nodes) > 0) and rule.jacobi_exponent == -s
    # v^a (1-v)^-s against the Beta weight is exact for integer a
    for a in range(6):
        assert np.sum(rule.weights * rule.nodes**a) == pytest.approx(sps.beta(s + a, 1 - s), rel=1e-9)


@pytest.mark.parametrize("left,right", [(-0.5, None), (None, -0.75), (-0.3, -0.6), (0.5, None)])
def test_graded_rule_against_scipy(left, right):
    def smooth(t):
        return np.cos(3 * t) + t**2

    def full(t):
        v = smooth(t)
        if left is not None:
            v = v * t**left
        if right is not None:
            v = v * (1 - t) ** right
        return v

    t, w = q.graded_rule(0.0, 1.0, left, right)
    ref = integrate.quad(smooth, 0, 1, weight="alg", wvar=(left or 0.0, right or 0.0), epsabs=1e-14)[0]
    assert np.sum(w * full(t)) == pytest.approx(ref, rel=1e-10)


def test_segment_rule_kink():
    t, w = q.segment_rule([0.0, 0.3, 1.0])
    assert np.sum(w * np.abs(t - 0.3)) == pytest.approx(0.3**2 / 2 + 0.7**2 / 2, rel=1e-14)


@given(st.lists(st.floats(-1e6, 1e6), min_size=0, max_size=200))
def test_pairwise_sum(vals):
    v = np.array(vals, dtype=float)
    scale = max(1.0, float(np.sum(np.abs(v))))
    assert abs(q.pairwise_sum(v) - math.fsum(vals)) <= 1e-13 * scale
    assert q.pairwise_sum(v) == q.pairwise_sum(v.copy())


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sphere_rule_low_moments(n):
    rule = q.sphere_rule(n, q.default_sphere_degree(n))
    area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    D, W = rule.directions, rule.weights
    assert W.sum() == pytest.approx(area, rel=1e-13)
    assert np.allclose(np.linalg.norm(D, axis=1), 1.0)
    for i in range(n):
        assert W @ D[:, i] == pytest.approx(0.0, abs=1e-13)
        assert W @ D[:, i] ** 2 == pytest.approx(area / n, rel=1e-12)
        assert W @ D[:, i] ** 3 == pytest.approx(0.0, abs=1e-13)
        assert W @ D[:, i] ** 4 == pytest.approx(3 * area / (n * (n + 2)), rel=1e-12)
    if n > 1:
        assert W @ (D[:, 0] * D[:, 1]) == pytest.approx(0.0, abs=1e-13)
        assert W @ (D[:, 0] ** 2 * D[:, 1] ** 2) == pytest.approx(area / (n * (n + 2)), rel=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_axial_rule_clustered_mass(n):
    axis = np.array([0.6, 0.8, 0.0][:n]) / np.linalg.norm([0.6, 0.8, 0.0][:n])
    rule = q.axial_sphere_rule(n, axis, cluster=1e-3)
    area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    assert rule.weights.sum() == pytest.approx(area, rel=1e-12)
    assert rule.weights @ (rule.directions @ axis) ** 2 == pytest.approx(area / n, rel=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_harmonic_measure_reproduces_harmonic(n):
    x = np.array([0.3, -0.5, 0.2][:n])
    for rho in (1.0, 2.0):
        hm = q.harmonic_measure_rule(n, x, rho, n_ang=64)
        assert hm.weights.sum() == pytest.approx(1.0, abs=1e-13)
        Y = rho * hm.directions
        np.testing.assert_allclose(hm.weights @ Y, x, atol=1e-10)
        if n > 1:
            # x1^2 - x2^2 is harmonic
            assert hm.weights @ (Y[:, 0] ** 2 - Y[:, 1] ** 2) == pytest.approx(x[0] ** 2 - x[1] ** 2, abs=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("s", S_GRID)
def test_exterior_eta_mass(n, s):
    p = FracParams(n, s)
    assert q.integrate_exterior(p, lambda Y: kernels.eta_r(p, 1.0, Y)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_poisson_rule_mass_and_usigma(n):
    for s in (0.25, 0.5, 0.75):
        p = FracParams(n, s)
        x = 0.5 * np.eye(n)[0]
        rule = q.poisson_rule(p, x)
        assert rule.integrate(lambda Y: np.ones(len(Y))) == pytest.approx(1.0, abs=1e-6)
        sig = 0.5 * (1 - s)
        rule = q.poisson_rule(p, x, sigma=sig, decay=sig)
        val = rule.integrate(kernels.g_sigma(p, sig))
        assert val == pytest.approx(c_const(n, s) / 0.75**sig, rel=1e-4)


def test_poisson_rule_domain():
    p = FracParams(2, 0.5)
    with pytest.raises(DomainError):
        q.poisson_rule(p, np.array([1.0, 0.0]))
    with pytest.raises(q.NonIntegrableError):
        q.poisson_rule(p, np.zeros(2), sigma=0.5)


def test_exterior_rejects():
    p = FracParams(2, 0.5)
    with pytest.raises(q.NonIntegrableError):
        q.integrate_exterior(p, lambda Y: np.ones(len(Y)), edge_exp=1.0)
    with pytest.raises(q.AccuracyError):
        q.integrate_exterior(p, lambda Y: np.ones(len(Y)), decay=0.0)


def test_exterior_detects_unresolved():
    p = FracParams(1, 0.5)
    # declared decay is wrong: the integrand only decays like |y|^-1.2
    f = lambda Y: np.abs(Y[:, 0]) ** -1.2  # noqa: E731
    with pytest.raises(q.AccuracyError):
        q.integrate_exterior(p, f, edge_exp=0.0, decay=0.5, n_nodes=8)


def test_ball_examples():
    p = FracParams(2, 0.5)
    assert q.integrate_ball(p, lambda Y: np.ones(len(Y))) == pytest.approx(math.pi, abs=1e-10)
    g = q.integrate_ball(p, lambda Y: kernels.ball_green(p, np.zeros(2), Y), beta=-0.5)
    assert g == pytest.approx(kernels.torsion(p, 1.0, np.zeros(2)), rel=1e-3)
    with pytest.raises(q.NonIntegrableError):
        q.integrate_ball(p, lambda Y: np.ones(len(Y)), beta=1.6)


@pytest.mark.parametrize("beta", [0.3, 0.7])
def test_ball_singular_weight(beta):
    p = FracParams(3, 0.5)
    val = q.integrate_ball(p, lambda Y: (1 - np.linalg.norm(Y, axis=1)) ** -beta, beta=beta)
    # 4 pi int_0^1 r^2 (1-r)^-beta dr
    assert val == pytest.approx(4 * math.pi * sps.beta(3, 1 - beta), rel=1e-8)


@pytest.mark.parametrize("n,s", [(1, 0.5), (2, 0.25), (2, 0.75), (3, 0.5)])
def test_pv_examples(n, s):
    p = FracParams(n, s)
    one = q.frac_laplacian_pv(p, lambda Y: kernels.torsion(p, 1.0, Y), np.zeros(n), in_exp=s, outside_zero=True)
    assert one == pytest.approx(1.0, abs=1e-3)
    x = 0.3 * np.eye(n)[0]
    sig = 0.5 * (1 - s)
    zero = q.frac_laplacian_pv(p, lambda Y: kernels.explicit_usigma(p, sig, Y), x, in_exp=-sig, out_exp=-sig,
                               decay=sig)
    assert abs(zero) < 1e-3
    # the analytic tail cancels the ray integral to rounding
    assert abs(q.frac_laplacian_pv(p, lambda Y: np.full(len(Y), 3.5), x)) < 1e-12


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("s", (0.25, 0.5, 0.75))
def test_pv_annihilates_affine_window(n, s):
    # affine inside the window, constant outside: the centred window keeps the PV odd
    p = FracParams(n, s)
    a = np.array([0.7, -0.4][:n])
    x = np.zeros(n)
    L = 4.0

    def u(Y):
        r = np.linalg.norm(Y, axis=1)
        return np.where(r < L, Y @ a + 1.0, 1.0)

    val = q.frac_laplacian_pv(p, u, x, R=L, in_exp=None, out_exp=None)
    assert abs(val) < 1e-8


def test_pv_growth_rejected():
    p = FracParams(1, 0.25)
    with pytest.raises(DomainError):
        q.frac_laplacian_pv(p, lambda Y: Y[:, 0], np.zeros(1), growth=1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_refinement_convergence(n):
    p = FracParams(n, 0.4)
    f = lambda Y: kernels.eta_r(p, 1.0, Y) * (1 + 1 / np.sum(Y * Y, axis=1))  # noqa: E731
    a = q.integrate_exterior(p, f, n_nodes=32, tol=1e-6)
    b = q.integrate_exterior(p, f, n_nodes=64, tol=1e-6)
    assert abs(a - b) < 1e-6
    pv = [q.frac_laplacian_pv(p, lambda Y: kernels.torsion(p, 1.0, Y), np.full(n, 0.2), in_exp=0.4,
                              outside_zero=True, n_rad=m) for m in (16, 32)]
    assert abs(pv[0] - pv[1]) < 1e-6


def test_eta_average_mass_offcentre():
    p = FracParams(2, 0.5)
    val = q.eta_average(p, lambda Y: np.ones(len(Y)), np.array([0.2, 0.1]), 0.3, in_exp=None, out_exp=None)
    assert val == pytest.approx(1.0, abs=1e-10)
