"""Truncated Bergman spaces: bases, kernels, shift isometries, Berezin maps.

Operators live in two forms.  Matrices act on the truncated monomial basis
through the L^2_nu pairing (coefficients are basis coefficients regardless of
the ambient p; only norms and the shift exponents see p).  Function-level
paths evaluate straight through quadrature and are used wherever truncation
would silently corrupt an identity: p-norms, projections, and the Berezin
transform of Toeplitz operators.

Dual pairing convention: <f, g> = integral of f * conj(g) dv_nu, mirroring
the adjoint computations this package is tested against.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .domains import (DomainSpec, as_point, is_interior, jordan_det,
                      jordan_det_power, geodesic_symmetry, polar_radius)
from .errors import AccuracyError, BoundaryPointError, NotAdmissibleError
from .quadrature import (QuadratureRule, WeightContext, build_rule,
                         default_orders, make_context, node_values)

DEFAULT_KERNEL_TAIL_TOL = 1e-6


def monomial_indices(n: int, max_degree: int):
    """Graded-lex multi-indices of total degree <= max_degree."""
    out = []
    for deg in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), deg):
            kappa = [0] * n
            for c in combo:
                kappa[c] += 1
            out.append(tuple(kappa))
    # combinations_with_replacement already yields lex order per degree
    return tuple(out)


def monomial_values(points: np.ndarray, indices) -> np.ndarray:
    """Matrix of raw monomial values, one column per multi-index."""
    pts = np.atleast_2d(points)
    npts, n = pts.shape
    maxdeg = max((max(k) for k in indices), default=0)
    powers = np.ones((npts, n, maxdeg + 1), dtype=np.complex128)
    for d in range(1, maxdeg + 1):
        powers[:, :, d] = powers[:, :, d - 1] * pts
    cols = [np.prod(powers[np.arange(npts)[:, None], np.arange(n)[None, :],
                           np.array(k)[None, :]], axis=1) for k in indices]
    return np.stack(cols, axis=1)


@dataclass
class BasisSpec:
    """Orthonormalized monomial basis of a truncated Bergman space."""

    dom: DomainSpec
    ctx: WeightContext
    max_degree: int
    indices: tuple
    norms: np.ndarray            # ||z^kappa|| in L^2_nu
    rule: QuadratureRule
    node_values: np.ndarray      # normalized basis values at rule nodes (N, dim)
    gram_defect: float           # max |Gram - I| entry

    @property
    def dim(self) -> int:
        return len(self.indices)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([sum(k) for k in self.indices])

    def evaluate(self, points) -> np.ndarray:
        """Normalized basis functions at arbitrary points, shape (npts, dim)."""
        pts = as_point(self.dom, np.asarray(points))
        flat = pts.reshape(-1, self.dom.n)
        return monomial_values(flat, self.indices) / self.norms[None, :]

    def synthesize(self, coeffs, points) -> np.ndarray:
        return self.evaluate(points) @ np.asarray(coeffs)

    def manifest(self) -> dict:
        m = self.ctx.manifest()
        m.update({"max_degree": self.max_degree, **self.rule.manifest()})
        return m


@lru_cache(maxsize=32)
def _build_basis_cached(dom: DomainSpec, ctx: WeightContext, max_degree: int,
                        radial_order: int, angular_order: int) -> BasisSpec:
    rule = build_rule(dom, ctx.nu, radial_order, angular_order)
    indices = monomial_indices(dom.n, max_degree)
    raw = monomial_values(rule.points.reshape(-1, dom.n), indices)
    norms = np.sqrt(np.real(np.einsum("i,ik,ik->k", rule.weights, raw.conj(), raw)))
    E = raw / norms[None, :]
    gram = E.conj().T @ (rule.weights[:, None] * E)
    defect = float(np.max(np.abs(gram - np.eye(len(indices)))))
    return BasisSpec(dom, ctx, max_degree, indices, norms, rule, E, defect)


def build_basis(dom: DomainSpec, ctx: WeightContext, max_degree: int,
                radial_order: int | None = None,
                angular_order: int | None = None) -> BasisSpec:
    """Basis with quadrature-certified norms and orthogonality.

    Refuses non-admissible contexts: all kernel-normalization quantities
    downstream (C_p in particular) rely on admissibility of (nu, nu, p).
    """
    if dom.kind == "matrix_ball":
        raise NotImplementedError("truncated bases are built for the disk and balls; "
                                  "the matrix ball supports geometry and measures only")
    if not ctx.admissible:
        raise NotAdmissibleError(f"(alpha={ctx.alpha}, nu={ctx.nu}, p={ctx.p}) "
                                 "is not admissible")
    ro, ao = default_orders(dom)
    basis = _build_basis_cached(dom, ctx, int(max_degree),
                                int(radial_order or ro), int(angular_order or ao))
    if basis.gram_defect > 1e-8:
        raise AccuracyError(f"basis orthogonality defect {basis.gram_defect:.2e}; "
                            "raise the quadrature orders")
    return basis


@dataclass
class OperatorMatrix:
    """Dense matrix of an operator on a truncated basis, with provenance."""

    entries: np.ndarray
    basis: BasisSpec
    p: float
    label: str = ""
    spill: float = 0.0           # estimate of ||(I - Pi_d) A Pi_d|| where known

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def norm2(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def apply(self, coeffs) -> np.ndarray:
        return self.entries @ np.asarray(coeffs)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.entries @ other.entries, self.basis, self.p,
                                  f"({self.label})@({other.label})",
                                  self.spill + other.spill)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.entries + other.entries, self.basis, self.p,
                                  f"({self.label})+({other.label})",
                                  max(self.spill, other.spill))
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.entries - other.entries, self.basis, self.p,
                                  f"({self.label})-({other.label})",
                                  max(self.spill, other.spill))
        return NotImplemented

    def __rmul__(self, scalar):
        return OperatorMatrix(scalar * self.entries, self.basis, self.p,
                              f"{scalar}*({self.label})", abs(scalar) * self.spill)

    def to_json(self) -> str:
        payload = {
            "schema": "operator-matrix/1",
            "basis": self.basis.manifest(),
            "p": self.p,
            "label": self.label,
            "spill": self.spill,
            "entries": [[float(v.real), float(v.imag)] for v in self.entries.ravel()],
            "dim": self.dim,
        }
        return json.dumps(payload, sort_keys=True)

    @staticmethod
    def entries_from_json(text: str) -> np.ndarray:
        payload = json.loads(text)
        dim = payload["dim"]
        flat = np.array([complex(re, im) for re, im in payload["entries"]])
        return flat.reshape(dim, dim)


def identity_matrix(basis: BasisSpec, p: float | None = None) -> OperatorMatrix:
    return OperatorMatrix(np.eye(basis.dim, dtype=np.complex128), basis,
                          p or basis.ctx.p, "I")


# ---------------------------------------------------------------------------
# kernels and projections
# ---------------------------------------------------------------------------

@dataclass
class KernelFunction:
    """Normalized reproducing kernel k_z^{(p)}(w) = h(z,z)^{s/q} h(w,z)^{-s}."""

    ctx: WeightContext
    z: np.ndarray
    pexp: float

    @property
    def qexp(self) -> float:
        return self.pexp / (self.pexp - 1.0)

    def __call__(self, w) -> np.ndarray:
        s = self.ctx.s
        hzz = np.real(jordan_det(self.ctx.dom, self.z, self.z))
        return hzz ** (s / self.qexp) * jordan_det_power(self.ctx.dom, w, self.z, -s)

    def l2_norm_squared(self) -> float:
        """Closed form: ||k_z^{(p)}||_{L^2}^2 = h(z,z)^{s(2/q - 1)}."""
        s = self.ctx.s
        hzz = float(np.real(jordan_det(self.ctx.dom, self.z, self.z)))
        return hzz ** (s * (2.0 / self.qexp - 1.0))


def reproducing_kernel(ctx: WeightContext, z, pexp: float | None = None) -> KernelFunction:
    z = as_point(ctx.dom, z)
    if not is_interior(ctx.dom, z):
        raise BoundaryPointError("kernel base point must be interior")
    return KernelFunction(ctx, z, float(pexp or ctx.p))


def projection_apply(ctx: WeightContext, rule: QuadratureRule, f):
    """The weighted projection as a callable: z -> int f(w) h(z,w)^{-s} dv(w).

    ``rule`` must integrate against dv_alpha for the projection weight alpha
    (pass a rule built with nu = ctx.alpha).  Idempotent on holomorphic
    polynomials; the returned callable accepts single points or batches.
    """
    s = ctx.alpha + ctx.dom.g
    fvals = node_values(rule, f) * rule.weights

    def proj(z):
        z = as_point(ctx.dom, np.asarray(z))
        single = z.ndim == 1 or (ctx.dom.kind == "matrix_ball" and z.ndim == 2)
        zb = z[None, ...] if single else z
        if not is_interior(ctx.dom, zb):
            raise BoundaryPointError("projection evaluated at a boundary point")
        kern = jordan_det_power(ctx.dom, zb[:, None], rule.points[None, :], -s)
        out = kern @ fvals
        return out[0] if single else out

    return proj


def kernel_coefficients(basis: BasisSpec, kern: KernelFunction,
                        tail_tol: float = DEFAULT_KERNEL_TAIL_TOL):
    """Basis coefficients of k_z with an explicit truncation-tail certificate."""
    vals = kern(basis.rule.points.reshape(-1, basis.dom.n))
    coeffs = basis.node_values.conj().T @ (basis.rule.weights * vals)
    norm2 = kern.l2_norm_squared()
    tail2 = max(norm2 - float(np.sum(np.abs(coeffs) ** 2)), 0.0)
    rel_tail = np.sqrt(tail2 / norm2)
    if rel_tail > tail_tol:
        raise AccuracyError(
            f"kernel expansion tail {rel_tail:.2e} exceeds {tail_tol:.0e} at "
            f"t1={float(polar_radius(basis.dom, kern.z)):.4f}; "
            "increase max_degree or move z inward")
    return coeffs


# ---------------------------------------------------------------------------
# the shift isometries U_z^p
# ---------------------------------------------------------------------------

def shift_function(ctx: WeightContext, z, pexp: float | None = None):
    """U_z^p as a function-level operator: callable -> callable."""
    dom = ctx.dom
    z = as_point(dom, z)
    p = float(pexp or ctx.p)
    s = ctx.s
    hzz = float(np.real(jordan_det(dom, z, z)))

    def apply(f):
        def g(w):
            w = as_point(dom, np.asarray(w))
            mapped = geodesic_symmetry(dom, z, w)
            return (np.asarray(f(mapped))
                    * hzz ** (s / p)
                    * jordan_det_power(dom, w, z, -2.0 * s / p))
        return g

    return apply


def shift_isometry_matrix(basis: BasisSpec, z, pexp: float | None = None) -> OperatorMatrix:
    """Gram matrix of U_z^p on the truncated basis, with spill estimate.

    U_z^p does not preserve degree, so the matrix is the compression
    Pi_d U_z^p Pi_d; the reported spill bounds ||(I - Pi_d) U_z^p Pi_d|| in
    L^2 (per column, maximized).
    """
    dom, ctx = basis.dom, basis.ctx
    z = as_point(dom, z)
    if not is_interior(dom, z):
        raise BoundaryPointError("shift point must be interior")
    p = float(pexp or ctx.p)
    s = ctx.s
    hzz = float(np.real(jordan_det(dom, z, z)))
    pts = basis.rule.points.reshape(-1, dom.n)
    mapped = geodesic_symmetry(dom, z, pts)
    factor = hzz ** (s / p) * jordan_det_power(dom, pts, z, -2.0 * s / p)
    mapped_vals = (monomial_values(mapped, basis.indices) / basis.norms[None, :]
                   * factor[:, None])
    U = basis.node_values.conj().T @ (basis.rule.weights[:, None] * mapped_vals)
    col_l2 = np.real(np.einsum("i,ik,ik->k", basis.rule.weights,
                               mapped_vals.conj(), mapped_vals))
    spill = float(np.sqrt(np.max(np.maximum(col_l2 - np.sum(np.abs(U) ** 2, axis=0),
                                            0.0))))
    t1 = float(polar_radius(dom, z))
    return OperatorMatrix(U, basis, p, f"U[z,t1={t1:.3f},p={p}]", spill)


def bz_symbol(ctx: WeightContext, z, pexp: float | None = None):
    """The unimodular symbol b_z(y) = h(z,y)^c / h(y,z)^c, c = (1/q-1/p)(nu+g).

    Identically 1 for p = 2.  Returned as a plain callable (fits SymbolSpec).
    """
    dom = ctx.dom
    z = as_point(dom, z)
    p = float(pexp or ctx.p)
    q = p / (p - 1.0)
    c = (1.0 / q - 1.0 / p) * ctx.s

    def b(y):
        y = as_point(dom, np.asarray(y))
        if c == 0.0:
            return np.ones(y.shape[:-1] if dom.kind != "matrix_ball" else y.shape[:-2],
                           dtype=np.complex128)
        num = jordan_det_power(dom, z, y, c)
        den = jordan_det_power(dom, y, z, c)
        return num / den

    return b


# ---------------------------------------------------------------------------
# Berezin transform
# ---------------------------------------------------------------------------

def berezin_matrix(A: OperatorMatrix, z, tail_tol: float = DEFAULT_KERNEL_TAIL_TOL) -> complex:
    """B(A)(z) for a matrix operator, via certified kernel expansions."""
    basis = A.basis
    ctx = basis.ctx
    kp = reproducing_kernel(ctx, z, A.p)
    kq = reproducing_kernel(ctx, z, kp.qexp)
    gamma = kernel_coefficients(basis, kp, tail_tol)
    delta = kernel_coefficients(basis, kq, tail_tol)
    return complex(np.vdot(delta, A.entries @ gamma))


def berezin_symbol_quadrature(ctx: WeightContext, rule: QuadratureRule, f, z,
                              max_t1: float = 0.995) -> complex:
    """B(T_f)(z) = int f(phi_z(u)) dv_nu(u), independent of p.

    The Moebius substitution makes this boundary-robust, but the quadrature
    itself loses accuracy once z is extremely close to the boundary; beyond
    ``max_t1`` this refuses rather than degrade silently (polynomial symbols
    have an exact series path in the toeplitz module).
    """
    z = as_point(ctx.dom, z)
    t1 = float(polar_radius(ctx.dom, z))
    if t1 > max_t1:
        raise AccuracyError(f"Berezin quadrature at t1={t1:.5f} exceeds the "
                            f"configured accuracy range (t1 <= {max_t1})")
    mapped = geodesic_symmetry(ctx.dom, z, rule.points.reshape(-1, ctx.dom.n))
    vals = np.asarray(f(mapped), dtype=np.complex128)
    if not np.all(np.isfinite(vals)):
        raise AccuracyError("symbol produced non-finite values")
    return complex(np.sum(rule.weights * vals))


def berezin_transform(A, z, *, rule: QuadratureRule | None = None,
                      ctx: WeightContext | None = None,
                      tail_tol: float = DEFAULT_KERNEL_TAIL_TOL) -> complex:
    """Berezin transform of a matrix operator or a symbol (meaning T_f)."""
    if isinstance(A, OperatorMatrix):
        return berezin_matrix(A, z, tail_tol)
    if ctx is None or rule is None:
        raise ValueError("symbol path needs ctx and rule")
    return berezin_symbol_quadrature(ctx, rule, A, z)
