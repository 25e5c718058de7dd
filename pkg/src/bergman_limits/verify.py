"""Batch invariant suites: each returns residuals against stated tolerances.

These are the library's self-checks, runnable from the CLI (``verify``
subcommand).  They are smaller, faster variants of the acceptance tests; the
test suite runs the full-size versions.  ``fault`` deliberately corrupts one
computation so the harness can demonstrate that a broken build fails loudly.
"""

from __future__ import annotations

import numpy as np

from . import bergman as bg
from . import limits as lm
from . import bandstruct as bs
from . import toeplitz as tp
from .domains import (DomainSpec, bergman_distance, geodesic_symmetry,
                      jordan_det, jordan_det_power, random_interior)
from .quadrature import WeightContext, build_rule, rule_for
from .symbols import SymbolSpec, compose_mobius, poly_symbol


def _suite(name, residual, tol):
    return {"name": name, "residual": float(residual), "tolerance": float(tol),
            "pass": bool(residual <= tol)}


def geometry_suite(dom: DomainSpec, nsamples: int = 40, seed: int = 1,
                   fault: str | None = None):
    rng = np.random.default_rng(seed)
    z = random_interior(dom, rng, nsamples, tmax=0.7)
    w = random_interior(dom, rng, nsamples, tmax=0.7)
    x = random_interior(dom, rng, nsamples, tmax=0.7)
    out = []

    h_z0 = jordan_det(dom, z, np.zeros_like(z[0]))
    out.append(_suite("h(z,0)=1", np.abs(h_z0 - 1.0).max(), 1e-12))
    sym = np.abs(jordan_det(dom, w, z) - np.conj(jordan_det(dom, z, w))).max()
    out.append(_suite("h(w,z)=conj h(z,w)", sym, 1e-12))

    r7 = 0.0
    for k in range(nsamples):
        lhs = jordan_det(dom, geodesic_symmetry(dom, z[k], x[k]),
                         geodesic_symmetry(dom, z[k], w[k]))
        hzz = jordan_det(dom, z[k], z[k])
        rhs = hzz * jordan_det(dom, x[k], w[k]) / (
            jordan_det(dom, x[k], z[k]) * jordan_det(dom, z[k], w[k]))
        r7 = max(r7, abs(lhs - rhs) / abs(rhs))
    out.append(_suite("h transform under phi_z (vii)", r7, 1e-10))

    rinv = 0.0
    rint = 0.0
    for k in range(nsamples):
        back = geodesic_symmetry(dom, z[k], geodesic_symmetry(dom, z[k], w[k]))
        rinv = max(rinv, float(np.abs(back - w[k]).max()))
        rint = max(rint, float(np.abs(geodesic_symmetry(dom, z[k], z[k])).max()))
    out.append(_suite("phi_z involution", rinv, 1e-12))
    out.append(_suite("phi_z(z)=0", rint, 1e-12))

    rbeta = 0.0
    for k in range(0, nsamples - 2, 3):
        a, b, c = z[k], w[k + 1], x[k + 2]
        lhs = bergman_distance(dom, geodesic_symmetry(dom, a, b),
                               geodesic_symmetry(dom, a, c))
        rhs = bergman_distance(dom, b, c)
        rbeta = max(rbeta, abs(lhs - rhs) / max(rhs, 1e-12))
    out.append(_suite("beta invariance under phi_a", rbeta, 1e-9))

    # branch continuity of h^lambda along radial paths
    jump = 0.0
    s = np.linspace(0.0, 1.0, 100)
    for k in range(min(10, nsamples)):
        if dom.kind == "matrix_ball":
            path = s[:, None, None] * w[k]
        else:
            path = s[:, None] * w[k]
        vals = jordan_det_power(dom, z[k], path, 0.5)
        if fault == "branch":
            vals = vals * np.where(np.arange(len(vals)) % 2, np.exp(1j * np.pi), 1.0)
        args = np.angle(vals)
        jump = max(jump, float(np.abs(np.diff(args)).max()))
    out.append(_suite("h^lambda branch continuity (max arg step)", jump, np.pi / 2))
    return out


def isometry_suite(dom: DomainSpec, ctx: WeightContext, nfuncs: int = 8,
                   seed: int = 2):
    rng = np.random.default_rng(seed)
    rule = rule_for(dom, ctx.nu)
    basis = bg.build_basis(dom, ctx, 10)
    pts = rule.points.reshape(-1, dom.n)
    out = []
    p = ctx.p
    worst = 0.0
    # zero-free random polynomials keep |f|^p quadrature-smooth for p not in 2N
    zgrid = random_interior(dom, rng, 3, tmax=0.6)
    for _ in range(nfuncs):
        coeffs = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        coeffs = 0.8 * coeffs / np.sum(np.abs(coeffs))
        coeffs[0] += 1.0
        f = lambda w, c=coeffs: basis.synthesize(c, w)
        norm_f = np.sum(rule.weights * np.abs(f(pts)) ** p) ** (1.0 / p)
        for z in zgrid:
            Uf = bg.shift_function(ctx, z, p)(f)
            norm_uf = np.sum(rule.weights * np.abs(Uf(pts)) ** p) ** (1.0 / p)
            worst = max(worst, abs(norm_uf - norm_f) / norm_f)
    out.append(_suite(f"U_z^p isometry (p={p})", worst, 1e-7))

    # involution at function level
    z = random_interior(dom, rng, 1, tmax=0.6)[0]
    f = lambda w: basis.synthesize(np.ones(basis.dim), w)
    U = bg.shift_function(ctx, z, p)
    probe = random_interior(dom, rng, 20, tmax=0.8)
    vals = U(U(f))(probe)
    out.append(_suite("U_z^p involution", np.abs(vals - f(probe)).max(), 1e-10))

    # U_z^p f_z = k_z^{(p)} pointwise
    worst = 0.0
    for t in (0.2, 0.5, 0.7):
        z = random_interior(dom, rng, 1, tmax=t)[0]
        s = ctx.s
        fz = lambda w, z=z: jordan_det_power(dom, w, z, s * (1.0 - 2.0 / p))
        k = bg.reproducing_kernel(ctx, z, p)
        got = bg.shift_function(ctx, z, p)(fz)(probe)
        worst = max(worst, np.abs(got - k(probe)).max())
    out.append(_suite("U_z^p f_z = k_z^(p)", worst, 1e-9))
    return out


def projection_suite(dom: DomainSpec, ctx: WeightContext, seed: int = 3):
    rng = np.random.default_rng(seed)
    rule = rule_for(dom, ctx.nu)
    basis = bg.build_basis(dom, ctx, 10)
    out = []
    worst = 0.0
    for _ in range(10):
        coeffs = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        z = random_interior(dom, rng, 1, tmax=0.7)[0]
        k = bg.reproducing_kernel(ctx, z, 2.0)
        f = lambda w, c=coeffs: basis.synthesize(c, w)
        lhs = np.sum(rule.weights * f(rule.points.reshape(-1, dom.n))
                     * np.conj(k(rule.points.reshape(-1, dom.n))))
        lhs = lhs * np.real(jordan_det(dom, z, z)) ** (-ctx.s / 2.0)
        rhs = complex(np.asarray(f(z[None, :])).ravel()[0])
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-12))
    out.append(_suite("reproducing identity", worst, 1e-8))

    # P_alpha U_z^p = U_z^p P_alpha on probes
    from .quadrature import make_context
    alpha = (2.0 / ctx.p - 1.0) * dom.g + 2.0 * ctx.nu / ctx.p
    ctx_a = make_context(dom, ctx.nu, ctx.p, alpha)
    if ctx_a.admissible and alpha > -1.0:
        rule_a = rule_for(dom, alpha)
        proj = lambda f: bg.projection_apply(ctx_a, rule_a, f)
        z = random_interior(dom, rng, 1, tmax=0.5)[0]
        U = bg.shift_function(ctx, z, ctx.p)
        coeffs = rng.normal(size=basis.dim)
        f = lambda w: basis.synthesize(coeffs, w)
        probes = random_interior(dom, rng, 12, tmax=0.6)
        a = proj(U(f))(probes)
        b = U(proj(f))(probes)
        scale = np.abs(b).max()
        out.append(_suite(f"P_alpha U_z^p commutation (alpha={alpha:g})",
                          np.abs(a - b).max() / max(scale, 1e-12), 1e-7))
    return out


def toeplitz_suite(dom: DomainSpec, ctx: WeightContext, seed: int = 4):
    if dom.kind != "disk":
        return []
    rng = np.random.default_rng(seed)
    basis = bg.build_basis(dom, ctx, 14)
    out = []
    f = poly_symbol(rng.normal(size=(3, 3)) / 6.0, dom, "rand")
    T = tp.assemble_toeplitz(basis, f)
    fconj = poly_symbol(np.conj(f.poly).T, dom, "conj rand")
    Tc = tp.assemble_toeplitz(basis, fconj)
    out.append(_suite("adjoint: T_conj(f) = T_f^*",
                      np.abs(Tc.entries - T.entries.conj().T).max(), 1e-12))
    out.append(_suite("norm bound ||T_f|| <= sup|f|",
                      max(T.norm2() - f.bound, 0.0), 1e-10))
    radial = poly_symbol([[0.3, 0.0], [0.0, 0.5]], dom, "radial")
    Tr = tp.assemble_toeplitz(basis, radial).entries
    out.append(_suite("radial symbol gives diagonal",
                      np.abs(Tr - np.diag(np.diag(Tr))).max(), 1e-12))
    z = np.array([0.3 + 0.2j])
    res = tp.shifted_toeplitz_check(basis, f, z)
    out.append(_suite("shifted Toeplitz identity (p=2)", res, 1e-5))
    if abs(ctx.p - 2.0) > 1e-12:
        res = tp.shifted_toeplitz_check(basis, f, z, pexp=ctx.p)
        out.append(_suite(f"shifted Toeplitz identity (p={ctx.p:g})", res, 1e-4))
    return out


def berezin_suite(dom: DomainSpec, ctx: WeightContext, seed: int = 5):
    if dom.kind != "disk":
        return []
    rng = np.random.default_rng(seed)
    basis = bg.build_basis(dom, ctx, 16)
    out = []
    I = bg.identity_matrix(basis)
    worst = 0.0
    for t in (0.1, 0.3):
        z = t * np.exp(2j * np.pi * rng.uniform())
        worst = max(worst, abs(bg.berezin_matrix(I, np.array([z])) - 1.0))
    out.append(_suite("B(identity) = 1", worst, 1e-9))

    f = poly_symbol([[0.0, 0.4], [1.0, 0.0]], dom, "z+0.4conj(z)")
    worst = 0.0
    for _ in range(20):
        z = random_interior(dom, rng, 1, tmax=0.6)[0]
        zeta = random_interior(dom, rng, 1, tmax=0.6)[0]
        shifted = compose_mobius(f, z)
        lhs = tp.berezin_toeplitz(basis, shifted, zeta)
        rhs = tp.berezin_toeplitz(basis, f, geodesic_symmetry(dom, z, zeta))
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-12))
    out.append(_suite("shifted Berezin identity (p=2)", worst, 1e-6))

    if abs(ctx.p - 2.0) > 1e-12:
        worst = 0.0
        for _ in range(30):
            z = random_interior(dom, rng, 1, tmax=0.8)[0]
            y = random_interior(dom, rng, 1, tmax=0.95)[0]
            b = bg.bz_symbol(ctx, z, ctx.p)
            worst = max(worst, abs(abs(complex(b(y[None, :])[0])) - 1.0))
        out.append(_suite(f"|b_z| = 1 (p={ctx.p:g})", worst, 1e-12))
    return out


def partition_suite(dom: DomainSpec, ctx: WeightContext):
    if dom.kind != "disk":
        return []
    cover = bs.build_cover(dom, 0.5, 0.95)
    try:
        part = bs.build_partition(cover)
        cert = part.certificate
        return [
            _suite("partition (a): sum to 1", cert["sum_defect"], 1e-12),
            _suite("partition (c): phi Lipschitz/6Nt",
                   cert["lip_phi_max"] / cert["lip_phi_bound"], 1.0),
            _suite("partition (f): psi Lipschitz/3t",
                   cert["lip_psi_max"] / cert["lip_psi_bound"], 1.0),
        ]
    except Exception as e:  # certification failure carries the failing pair
        return [{"name": "partition certification", "residual": float("inf"),
                 "tolerance": 1.0, "pass": False, "detail": str(e)}]


def run_all(dom: DomainSpec, ctx: WeightContext, fault: str | None = None):
    suites = []
    suites += geometry_suite(dom, fault=fault)
    suites += isometry_suite(dom, ctx)
    suites += projection_suite(dom, ctx)
    suites += toeplitz_suite(dom, ctx)
    suites += berezin_suite(dom, ctx)
    suites += partition_suite(dom, ctx)
    return suites
