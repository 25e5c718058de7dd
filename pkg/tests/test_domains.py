"""Geometry of the three domains, checked against independent oracles:
finite differences for the metric tensor, explicit SVD for polar data,
path-tracking for branches, and closed Moebius formulas on the disk."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import bergman_limits as bl
from bergman_limits.domains import (pairwise_distance, random_interior,
                                    is_interior, as_point)
from bergman_limits.errors import BoundaryPointError, DimensionMismatchError

DISK = bl.unit_disk()
BALL2 = bl.unit_ball(2)
MBALL = bl.matrix_ball()
ALL_DOMAINS = [DISK, BALL2, MBALL]


def test_invariant_tables():
    for dom, expect in [(DISK, (1, 1, 0, 0, 2)), (BALL2, (2, 1, 0, 1, 3)),
                        (bl.unit_ball(3), (3, 1, 0, 2, 4)),
                        (MBALL, (4, 2, 2, 0, 4))]:
        assert (dom.n, dom.r, dom.a, dom.b, dom.g) == expect
        assert dom.g == dom.a * (dom.r - 1) + dom.b + 2


def test_polar_diagonal_examples():
    assert np.allclose(bl.polar_diagonal(BALL2, np.zeros(2)), [0.0])
    t = bl.polar_diagonal(DISK, np.array([0.6]))
    assert np.allclose(t, [0.6])
    # rank-1 diagonal formula h(z,z) = 1 - t1^2
    assert abs(bl.jordan_det(DISK, [0.6], [0.6]) - (1 - 0.6 ** 2)) < 1e-15
    Z = np.diag([0.5, 0.2]).astype(complex)
    assert np.allclose(bl.polar_diagonal(MBALL, Z), [0.5, 0.2])


def test_polar_matches_svd_oracle():
    rng = np.random.default_rng(3)
    Z = random_interior(MBALL, rng, 50, tmax=0.97)
    ours = bl.polar_diagonal(MBALL, Z)
    oracle = np.linalg.svd(Z, compute_uv=False)
    assert np.max(np.abs(ours - oracle)) < 1e-12


@pytest.mark.parametrize("dom", ALL_DOMAINS, ids=str)
def test_jordan_det_basic_properties(dom):
    rng = np.random.default_rng(7)
    z = random_interior(dom, rng, 60, tmax=0.9)
    w = random_interior(dom, rng, 60, tmax=0.9)
    zero = np.zeros_like(z[0])
    # (iii) h(z, 0) = 1, (iv) conjugate symmetry
    assert np.max(np.abs(bl.jordan_det(dom, z, zero) - 1.0)) < 1e-14
    assert np.max(np.abs(bl.jordan_det(dom, w, z)
                         - np.conj(bl.jordan_det(dom, z, w)))) < 1e-14
    # diagonal formula through the polar radii
    t = bl.polar_diagonal(dom, z)
    diag = np.prod(1.0 - t ** 2, axis=-1)
    assert np.max(np.abs(bl.jordan_det(dom, z, z) - diag)) < 1e-13


def test_jordan_det_unitary_invariance():
    rng = np.random.default_rng(11)
    from scipy.stats import unitary_group
    # ball: h(kz, kw) = h(z, w) for unitary k
    z = random_interior(BALL2, rng, 40)
    w = random_interior(BALL2, rng, 40)
    U = unitary_group.rvs(2, random_state=rng)
    assert np.max(np.abs(bl.jordan_det(BALL2, z @ U.T, w @ U.T)
                         - bl.jordan_det(BALL2, z, w))) < 1e-12
    # matrix ball: K acts by Z -> U Z V*
    Z = random_interior(MBALL, rng, 20)
    W = random_interior(MBALL, rng, 20)
    V = unitary_group.rvs(2, random_state=rng)
    moved = np.max(np.abs(bl.jordan_det(MBALL, U @ Z @ V.conj().T, U @ W @ V.conj().T)
                          - bl.jordan_det(MBALL, Z, W)))
    assert moved < 1e-12


@pytest.mark.parametrize("dom", ALL_DOMAINS, ids=str)
def test_jordan_det_boundary_behaviour(dom):
    rng = np.random.default_rng(13)
    # (i): |h(z, w)| > 0 for closed x open; (ii): h(z,z) -> 0 at the boundary
    zb = random_interior(dom, rng, 20, tmax=0.999999)
    w = random_interior(dom, rng, 20, tmax=0.8)
    assert np.min(np.abs(bl.jordan_det(dom, zb, w))) > 0
    ts = np.array([0.9, 0.99, 0.999, 0.9999])
    if dom.kind == "matrix_ball":
        pts = np.array([np.diag([t, 0.3 * t]).astype(complex) for t in ts])
    else:
        pts = ts[:, None] * np.eye(dom.n, dtype=complex)[0]
    vals = np.abs(bl.jordan_det(dom, pts, pts))
    assert np.all(np.diff(vals) < 0) and vals[-1] < 2e-4


@pytest.mark.parametrize("dom", ALL_DOMAINS, ids=str)
def test_jordan_det_power(dom):
    rng = np.random.default_rng(17)
    z = random_interior(dom, rng, 10, tmax=0.9)
    w = random_interior(dom, rng, 10, tmax=0.9)
    zero = np.zeros_like(z[0])
    for lam in (-3.0, 0.5, 2.0):
        assert np.max(np.abs(bl.jordan_det_power(dom, z, zero, lam) - 1.0)) < 1e-14
    # lambda = 1 reproduces h itself
    assert np.max(np.abs(bl.jordan_det_power(dom, z, w, 1.0)
                         - bl.jordan_det(dom, z, w))) < 1e-12
    # real positive on the diagonal
    vals = bl.jordan_det_power(dom, z, z, 0.7)
    assert np.max(np.abs(vals.imag)) < 1e-13 and np.all(vals.real > 0)


def test_jordan_det_power_disk_value():
    # 0.75^{-3} on the diagonal at z = 0.5
    got = bl.jordan_det_power(DISK, [0.5], [0.5], -3.0)
    assert abs(got - 0.75 ** -3) < 1e-13
    assert abs(got - 2.3703703703703702) < 1e-12


@pytest.mark.parametrize("dom", ALL_DOMAINS, ids=str)
def test_branch_continuity_along_paths(dom):
    """Path-tracking oracle: no argument jump > pi on 100-step radial paths."""
    rng = np.random.default_rng(19)
    z = random_interior(dom, rng, 6, tmax=0.9)
    w = random_interior(dom, rng, 6, tmax=0.95)
    s = np.linspace(0, 1, 100)
    for k in range(len(z)):
        if dom.kind == "matrix_ball":
            path = s[:, None, None] * w[k]
        else:
            path = s[:, None] * w[k]
        vals = bl.jordan_det_power(dom, z[k], path, 0.5)
        assert np.max(np.abs(np.diff(np.angle(vals)))) < np.pi


def test_geodesic_symmetry_disk_values():
    # phi_0 = -id and the closed Moebius value from the spec example
    w = np.array([0.3 - 0.2j])
    assert np.allclose(bl.geodesic_symmetry(DISK, np.array([0.0]), w), -w)
    got = bl.geodesic_symmetry(DISK, np.array([0.5]), np.array([0.25]))
    assert abs(got[0] - 0.25 / 0.875) < 1e-15
    assert abs(got[0] - 0.2857142857142857) < 1e-12


@pytest.mark.parametrize("dom", ALL_DOMAINS, ids=str)
def test_geodesic_symmetry_properties(dom):
    rng = np.random.default_rng(23)
    z = random_interior(dom, rng, 30, tmax=0.85)
    w = random_interior(dom, rng, 30, tmax=0.85)
    for k in range(len(z)):
        phi_w = bl.geodesic_symmetry(dom, z[k], w[k])
        assert is_interior(dom, phi_w)
        back = bl.geodesic_symmetry(dom, z[k], phi_w)
        assert np.max(np.abs(back - w[k])) < 1e-12      # involution
    zero = np.zeros_like(z[0])
    for k in range(len(z)):
        assert np.max(np.abs(bl.geodesic_symmetry(dom, z[k], zero) - z[k])) < 1e-13
        assert np.max(np.abs(bl.geodesic_symmetry(dom, z[k], z[k]))) < 1e-13


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(max_magnitude=0.85, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=0.85, allow_nan=False, allow_infinity=False))
def test_disk_involution_property(z, w):
    zp, wp = np.array([z]), np.array([w])
    back = bl.geodesic_symmetry(DISK, zp, bl.geodesic_symmetry(DISK, zp, wp))
    assert abs(back[0] - w) < 1e-12


@pytest.mark.parametrize("dom", ALL_DOMAINS, ids=str)
def test_h_transformation_property(dom):
    """Property (vii): h(phi_z x, phi_z y) h(x,z) h(z,y) = h(z,z) h(x,y)."""
    rng = np.random.default_rng(29)
    worst = 0.0
    for _ in range(100):
        z, x, y = random_interior(dom, rng, 3, tmax=0.8)
        lhs = bl.jordan_det(dom, bl.geodesic_symmetry(dom, z, x),
                            bl.geodesic_symmetry(dom, z, y))
        rhs = (bl.jordan_det(dom, z, z) * bl.jordan_det(dom, x, y)
               / (bl.jordan_det(dom, x, z) * bl.jordan_det(dom, z, y)))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    assert worst < 1e-10


def _fd_complex_jacobian(fn, w, eps=3e-3):
    """4th-order central differences for the holomorphic Jacobian."""
    n = len(w)
    J = np.zeros((n, n), dtype=complex)
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = eps
        J[:, j] = (8 * (fn(w + e) - fn(w - e)) - (fn(w + 2 * e) - fn(w - 2 * e))) / (12 * eps)
    return J


@pytest.mark.parametrize("dom", [DISK, BALL2], ids=str)
def test_measure_transformation_jacobian(dom):
    """Property (viii) pointwise: |det_R J phi_z| = h(z,z)^g / |h(w,z)|^{2g},
    with the Jacobian from a finite-difference oracle."""
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(50):
        z = random_interior(dom, rng, 1, tmax=0.6)[0]
        w = random_interior(dom, rng, 1, tmax=0.6)[0]
        J = _fd_complex_jacobian(lambda v: bl.geodesic_symmetry(dom, z, v), w)
        det_r = abs(np.linalg.det(J)) ** 2
        expect = (np.real(bl.jordan_det(dom, z, z)) ** dom.g
                  / abs(bl.jordan_det(dom, w, z)) ** (2 * dom.g))
        worst = max(worst, abs(det_r - expect) / expect)
    assert worst < 1e-8


def test_bergman_distance_disk_against_line_integral():
    """Numeric geodesic-integration oracle: integrate sqrt(g_11) along the
    radius, with g_11 = -g d d-bar log h from finite differences."""
    def g11(x):
        h = 1e-5
        def loghzz(u, v):
            return np.log(np.real(bl.jordan_det(DISK, [u + 1j * v], [u + 1j * v])))
        # Laplacian/4 = d^2/dz dzbar on radially symmetric evaluation
        lap = (loghzz(x + h, 0) + loghzz(x - h, 0) + loghzz(x, h) + loghzz(x, -h)
               - 4 * loghzz(x, 0)) / h ** 2
        return -DISK.g * lap / 4.0
    xs = np.linspace(0, 0.5, 2001)
    vals = np.sqrt([g11(x) for x in xs])
    oracle = np.trapezoid(vals, xs)
    ours = bl.bergman_distance(DISK, [0.0], [0.5])
    assert abs(ours - oracle) < 1e-5
    assert abs(ours - np.sqrt(2) * np.arctanh(0.5)) < 1e-12


def _mball_direction_speed(base, d):
    """sqrt of the hermitian form -g d d-bar log h(.,.) on direction d,
    evaluated by a 4-point finite-difference rule (independent oracle)."""
    h = 1e-4

    def logh(pt):
        return np.log(np.real(bl.jordan_det(MBALL, pt, pt)))

    lap = (logh(base + h * d) + logh(base - h * d)
           + logh(base + 1j * h * d) + logh(base - 1j * h * d)
           - 4 * logh(base)) / h ** 2
    return np.sqrt(max(-MBALL.g * lap / 4.0, 0.0))


def test_bergman_distance_matrix_ball_against_line_integral():
    """FD-metric line integral along the diagonal flat's geodesic, where the
    metric splits into scaled Poincare factors: z_j(s) = tanh(s artanh t_j)."""
    T1, T2 = 0.5, 0.3
    a = np.arctanh([T1, T2])
    xs = np.linspace(0, 1, 801)
    speeds = []
    for s in xs:
        base = np.diag(np.tanh(s * a)).astype(complex)
        d = np.diag(a / np.cosh(s * a) ** 2).astype(complex)
        speeds.append(_mball_direction_speed(base, d))
    oracle = np.trapezoid(speeds, xs)
    ours = bl.bergman_distance(MBALL, np.zeros((2, 2), dtype=complex),
                               np.diag([T1, T2]).astype(complex))
    assert abs(ours - oracle) / oracle < 1e-5
    closed = np.sqrt(MBALL.g) * np.hypot(*np.arctanh([T1, T2]))
    assert abs(ours - closed) < 1e-12
    # the straight ray is not the geodesic: its length strictly dominates
    ray = np.trapezoid([_mball_direction_speed(s * np.diag([T1, T2]).astype(complex),
                                               np.diag([T1, T2]).astype(complex))
                        for s in xs], xs)
    assert ray > ours - 1e-9


@pytest.mark.parametrize("dom", ALL_DOMAINS, ids=str)
def test_bergman_distance_properties(dom):
    rng = np.random.default_rng(37)
    z = random_interior(dom, rng, 15, tmax=0.8)
    w = random_interior(dom, rng, 15, tmax=0.8)
    a = random_interior(dom, rng, 15, tmax=0.8)
    for k in range(len(z)):
        assert bl.bergman_distance(dom, z[k], z[k]) < 1e-12
        d1 = bl.bergman_distance(dom, z[k], w[k])
        d2 = bl.bergman_distance(dom, w[k], z[k])
        assert abs(d1 - d2) < 1e-10
        # invariance under the symmetries
        lhs = bl.bergman_distance(dom, bl.geodesic_symmetry(dom, a[k], z[k]),
                                  bl.geodesic_symmetry(dom, a[k], w[k]))
        assert abs(lhs - d1) < 1e-9 * max(1.0, d1)
        # triangle inequality
        via = (bl.bergman_distance(dom, z[k], a[k])
               + bl.bergman_distance(dom, a[k], w[k]))
        assert d1 <= via + 1e-9


def test_bergman_distance_unbounded_toward_boundary():
    ts = [0.9, 0.99, 0.999]
    ds = [float(bl.bergman_distance(DISK, [0.0], [t])) for t in ts]
    assert ds[0] < ds[1] < ds[2] and ds[-1] > 5


def test_pairwise_distance_matches_scalar():
    rng = np.random.default_rng(41)
    for dom in ALL_DOMAINS:
        z = random_interior(dom, rng, 6, tmax=0.8)
        w = random_interior(dom, rng, 5, tmax=0.8)
        D = pairwise_distance(dom, z, w)
        for i in range(6):
            for j in range(5):
                assert abs(D[i, j] - bl.bergman_distance(dom, z[i], w[j])) < 1e-10


def test_check_admissible():
    assert bl.check_admissible(DISK, 0.0, 0.0, 2.0)
    assert bl.check_admissible(BALL2, 0.0, 0.0, 2.0)
    # matrix ball at nu = 0: the inequality band 1+(r-1)a/(2(nu+1)) < p is empty
    assert not bl.check_admissible(MBALL, 0.0, 0.0, 1.05)
    assert not bl.check_admissible(MBALL, 0.0, 0.0, 2.0)
    assert bl.check_admissible(MBALL, 2.0, 2.0, 2.0)
    # out-of-range parameters return False, never raise
    assert not bl.check_admissible(DISK, 0.0, -1.5, 2.0)
    assert not bl.check_admissible(DISK, 0.0, 0.0, 1.0)


def test_admissibility_reformulation_equivalence():
    """Eq-(1) form with alpha = nu matches the two-sided exponent band."""
    rng = np.random.default_rng(43)
    for _ in range(200):
        nu = rng.uniform(-0.9, 4.0)
        p = rng.uniform(1.01, 8.0)
        direct = bl.check_admissible(MBALL, nu, nu, p)
        half = (MBALL.r - 1) * MBALL.a / 2.0
        lo = 1.0 + half / (nu + 1.0)
        hi = 1.0 + (nu + 1.0) / half
        assert direct == (lo < p < hi)


def test_error_paths():
    with pytest.raises(DimensionMismatchError):
        bl.jordan_det(BALL2, np.zeros(3), np.zeros(2))
    with pytest.raises(DimensionMismatchError):
        as_point(MBALL, np.zeros(3))
    with pytest.raises(BoundaryPointError):
        bl.geodesic_symmetry(DISK, np.array([1.0]), np.array([0.2]))
    with pytest.raises(BoundaryPointError):
        bl.bergman_distance(DISK, [0.0], [1.0 - 1e-14])
