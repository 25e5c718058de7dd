"""Measures and rules, validated against independently constructed oracles:
plain Gauss-Legendre tensor integration, Monte Carlo volume estimates and
closed Beta/Gamma values."""

import numpy as np
import pytest
from scipy.special import roots_legendre

import bergman_limits as bl
from bergman_limits.domains import geodesic_symmetry, random_interior
from bergman_limits.errors import AccuracyError, NotAdmissibleError
from bergman_limits.quadrature import build_rule, rule_for, make_context

DISK = bl.unit_disk()
BALL2 = bl.unit_ball(2)
MBALL = bl.matrix_ball()


def _legendre_disk_integral(f, nrad=200, nang=256):
    """Independent oracle: plain Gauss-Legendre x trapezoid on the disk."""
    x, w = roots_legendre(nrad)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w
    th = 2 * np.pi * np.arange(nang) / nang
    z = r[:, None] * np.exp(1j * th)[None, :]
    vals = f(z)
    return float(np.sum(wr[:, None] * r[:, None] * vals * (2 * np.pi / nang)).real)


def test_normalization_constant_disk_against_quadrature_oracle():
    for nu, expect in [(0.0, 1 / np.pi), (1.0, 2 / np.pi)]:
        oracle = 1.0 / _legendre_disk_integral(lambda z: (1 - np.abs(z) ** 2) ** nu)
        ours = bl.normalization_constant(DISK, nu)
        assert abs(ours - oracle) < 1e-10
        assert abs(ours - expect) < 1e-14


def test_normalization_constant_ball2_against_oracle():
    # vol(B^4) = pi^2/2 via radial Gauss-Legendre: int r^3 dr * vol(S^3)
    x, w = roots_legendre(100)
    r = 0.5 * (x + 1.0)
    vol = float(np.sum(0.5 * w * r ** 3)) * 2 * np.pi ** 2
    assert abs(vol - np.pi ** 2 / 2) < 1e-12
    assert abs(bl.normalization_constant(BALL2, 0.0) - 1.0 / vol) < 1e-14
    assert abs(bl.normalization_constant(BALL2, 0.0) - 2 / np.pi ** 2) < 1e-15


def test_normalization_constant_matrix_ball_against_monte_carlo():
    # volume of the 2x2 spectral-norm ball inside the [-1,1]^8 box
    rng = np.random.default_rng(123)
    n = 2_000_000
    Z = rng.uniform(-1, 1, size=(n, 2, 2)) + 1j * rng.uniform(-1, 1, size=(n, 2, 2))
    inside = np.linalg.norm(Z, 2, axis=(1, 2)) < 1.0
    vol_mc = 2.0 ** 8 * inside.mean()
    vol_closed = 1.0 / bl.normalization_constant(MBALL, 0.0)
    assert abs(vol_closed - np.pi ** 4 / 12) < 1e-12
    assert abs(vol_mc - vol_closed) / vol_closed < 0.01


def test_normalization_rejects_divergent_weight():
    with pytest.raises(NotAdmissibleError):
        bl.normalization_constant(DISK, -1.0)
    with pytest.raises(NotAdmissibleError):
        build_rule(DISK, -1.2, 10, 16)
    with pytest.raises(ValueError):
        build_rule(DISK, 0.0, 0, 16)


@pytest.mark.parametrize("dom,nu", [(DISK, 0.0), (DISK, 1.0), (DISK, 2.5),
                                    (BALL2, 0.0), (BALL2, 1.0),
                                    (MBALL, 0.0), (MBALL, 1.0)], ids=str)
def test_rule_normalization(dom, nu):
    rule = rule_for(dom, nu)
    assert rule.meta["normalization_defect"] < 1e-12
    assert np.all(rule.weights > 0)
    assert abs(bl.integrate(rule, lambda z: np.ones(len(z))) - 1.0) < 1e-12


def test_disk_rule_examples():
    rule = build_rule(DISK, 0.0, 40, 64)
    assert abs(np.sum(rule.weights) - 1.0) < 1e-12
    # odd symmetry and the radial Beta moment  int |z|^2 dv_0 = 1/2
    assert abs(bl.integrate(rule, lambda z: z[:, 0])) < 1e-12
    assert abs(bl.integrate(rule, lambda z: np.abs(z[:, 0]) ** 2) - 0.5) < 1e-10
    assert abs(bl.integrate(rule, lambda z: z[:, 0] ** 2)) < 1e-12


def test_disk_moments_beta_oracle():
    # int |z|^{2k} dv_nu = Gamma(k+1)Gamma(nu+2)/Gamma(k+nu+2)
    from scipy.special import gammaln
    rule = rule_for(DISK, 1.5)
    for k in range(0, 8):
        oracle = np.exp(gammaln(k + 1) + gammaln(3.5) - gammaln(k + 3.5))
        got = bl.integrate(rule, lambda z, k=k: np.abs(z[:, 0]) ** (2 * k))
        assert abs(got - oracle) < 1e-12


def test_ball_moments_oracle():
    # int |z1^a z2^b|^2 dv_0 = a! b! (n)! / (n + a + b)! on B^2
    from math import factorial
    rule = rule_for(BALL2, 0.0)
    for a, b in [(1, 0), (1, 1), (2, 1), (3, 2)]:
        oracle = (factorial(a) * factorial(b) * factorial(2)
                  / factorial(2 + a + b))
        got = bl.integrate(rule, lambda z, a=a, b=b:
                           np.abs(z[:, 0] ** a * z[:, 1] ** b) ** 2)
        assert abs(got - oracle) < 1e-12


def test_matrix_ball_radial_moments():
    # int h(Z,Z) dv_0 = c_0/c_1 = 1/6 (exactly, by the closed Gamma forms)
    rule = rule_for(MBALL, 0.0)
    got = bl.integrate(rule, lambda Z: np.prod(
        1.0 - bl.polar_diagonal(MBALL, Z) ** 2, axis=-1))
    c0 = bl.normalization_constant(MBALL, 0.0)
    c1 = bl.normalization_constant(MBALL, 1.0)
    assert abs(got - c0 / c1) < 1e-12
    assert abs(got - 1.0 / 6.0) < 1e-12


def test_matrix_ball_haar_rule_nonradial():
    # unitary invariance averages |Z_{00}|^2 to (1/4) of the Frobenius moment;
    # the K-orbit is Monte Carlo, so accuracy is the usual 1/sqrt(samples)
    radial = rule_for(MBALL, 0.0)
    frob = bl.integrate(radial, lambda Z: np.sum(np.abs(Z) ** 2, axis=(1, 2)))
    haar = build_rule(MBALL, 0.0, 24, 16, haar_samples=256, seed=11)
    got = bl.integrate(haar, lambda Z: np.abs(Z[:, 0, 0]) ** 2)
    assert abs(got - frob / 4.0) / abs(frob / 4.0) < 6e-2
    assert haar.exact_radial_only is False


def test_kernel_change_of_variables_integral():
    """f = h(z0,z0)^{nu+g} |h(w,z0)|^{-2(nu+g)} integrates to one."""
    rule = rule_for(DISK, 0.0)
    z0 = np.array([0.4])
    s = 0.0 + DISK.g

    def f(w):
        return (np.real(bl.jordan_det(DISK, z0, z0)) ** s
                / np.abs(bl.jordan_det(DISK, w, z0)) ** (2 * s))
    assert abs(bl.integrate(rule, f) - 1.0) < 1e-10


@pytest.mark.parametrize("dom,tmax,tol", [(DISK, 0.6, 1e-8), (BALL2, 0.25, 1e-8)],
                         ids=str)
def test_measure_transformation_integral_form(dom, tmax, tol):
    """Property (viii) in integral form for polynomial test functions."""
    rng = np.random.default_rng(5)
    nu = 1.0
    rule = rule_for(dom, nu) if dom is DISK else build_rule(dom, nu, 32, 32)
    s = nu + dom.g

    def check(F, z):
        lhs = bl.integrate(rule, lambda w: F(geodesic_symmetry(dom, z, w)))
        dens = (np.real(bl.jordan_det(dom, z, z)) ** s
                / np.abs(bl.jordan_det(dom, rule.points.reshape(-1, dom.n), z))
                ** (2 * s))
        rhs = bl.integrate(rule, lambda y: F(y) * dens)
        return abs(lhs - rhs) / max(abs(rhs), 1e-12)

    worst = 0.0
    for _ in range(10):
        z = random_interior(dom, rng, 1, tmax=tmax)[0]
        for F in (lambda y: y[..., 0] ** 2,
                  lambda y: np.abs(y[..., 0]) ** 2 * y[..., -1],
                  lambda y: 1.0 + 0.3 * y[..., 0]):
            worst = max(worst, check(F, z))
    assert worst < tol


def test_refinement_convergence():
    base = build_rule(DISK, 0.5, 30, 64)
    fine = build_rule(DISK, 0.5, 60, 64)
    f = lambda z: np.exp(z[:, 0]) * np.abs(z[:, 0]) ** 2
    a = bl.integrate(base, f)
    b = bl.integrate(fine, f)
    assert abs(a - b) < base.target_accuracy


def test_integrate_rejects_nonfinite():
    rule = rule_for(DISK, 0.0)
    with pytest.raises(AccuracyError):
        bl.integrate(rule, lambda z: 1.0 / (np.abs(z[:, 0]) - np.abs(z[5, 0])))


def test_weight_context():
    ctx = make_context(DISK, 1.0, 4.0)
    assert abs(1 / ctx.p + 1 / ctx.q - 1.0) < 1e-15
    assert ctx.admissible and ctx.alpha == 1.0
    assert ctx.s == 1.0 + DISK.g
    ctx2 = make_context(MBALL, 0.0, 2.0)
    assert not ctx2.admissible
    m = ctx.manifest()
    assert m["nu"] == 1.0 and m["p"] == 4.0
