"""Weighted measures and high-accuracy integration over the domains.

The probability measure is dv_nu = c_nu * h(z,z)^nu * dv with dv the
(unnormalized) Lebesgue measure on the domain and c_nu the closed-form
normalization.  A rule's weights integrate directly against dv_nu, i.e.
``sum(w_i f(x_i)) ~ integral of f dv_nu``.

Rules are tensor products built from Gauss-Jacobi radial nodes (the boundary
weight (1-r^2)^nu is part of the rule, never sampled) and exact angular
factors: equispaced angles on the disk, a torus/simplex parameterization of
the sphere for balls, and singular-value coordinates for the 2x2 matrix ball
(exact for K-invariant integrands; Haar sampling handles the rest).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi
from scipy.stats import unitary_group

from .domains import DomainSpec, check_admissible
from .errors import AccuracyError, NotAdmissibleError


@dataclass(frozen=True)
class WeightContext:
    """Weight/exponent bundle (nu, p, alpha) with normalization constant."""

    dom: DomainSpec
    nu: float
    p: float
    alpha: float
    c_nu: float
    admissible: bool

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def s(self) -> float:
        """Kernel exponent nu + g."""
        return self.nu + self.dom.g

    def manifest(self) -> dict:
        return {"domain": str(self.dom), "nu": self.nu, "p": self.p,
                "alpha": self.alpha}


def make_context(dom: DomainSpec, nu: float = 0.0, p: float = 2.0,
                 alpha: float | None = None) -> WeightContext:
    if alpha is None:
        alpha = nu
    c = normalization_constant(dom, nu)
    adm = check_admissible(dom, alpha, nu, p)
    return WeightContext(dom, float(nu), float(p), float(alpha), c, adm)


def normalization_constant(dom: DomainSpec, nu: float) -> float:
    """c_nu with integral of c_nu h^nu dv equal to 1; requires nu > -1."""
    if nu <= -1.0:
        raise NotAdmissibleError("weight exponent nu must exceed -1")
    if dom.kind in ("disk", "ball"):
        n = dom.n
        return float(np.exp(gammaln(n + nu + 1.0) - gammaln(nu + 1.0)) / np.pi ** n)
    # 2x2 matrix ball: volume integral in singular-value coordinates
    # int h^nu dv = pi^4 (M2 M0 - M1^2), M_k = B(k+1, nu+1)
    def mom(k):
        return np.exp(gammaln(k + 1.0) + gammaln(nu + 1.0) - gammaln(k + nu + 2.0))
    vol = np.pi ** 4 * (mom(2) * mom(0) - mom(1) ** 2)
    return float(1.0 / vol)


@dataclass
class QuadratureRule:
    """Nodes/weights integrating against the probability measure dv_nu."""

    dom: DomainSpec
    nu: float
    points: np.ndarray           # (N, n) complex, or (N, 2, 2) for matrix ball
    weights: np.ndarray          # (N,) positive reals
    radial_order: int
    angular_order: int
    target_accuracy: float = 1e-10
    exact_radial_only: bool = False  # matrix ball: K-orbit handled by sampling
    meta: dict = field(default_factory=dict)

    @property
    def npoints(self) -> int:
        return len(self.weights)

    def eval_points(self):
        """Points squeezed to the natural per-domain shape for callables."""
        return self.points

    def manifest(self) -> dict:
        return {"radial_order": self.radial_order,
                "angular_order": self.angular_order,
                "npoints": self.npoints}


def _jacobi01(order: int, a: float, b: float):
    """Nodes/weights on [0,1] for the weight (1-u)^a u^b."""
    x, w = roots_jacobi(order, a, b)
    u = 0.5 * (x + 1.0)
    w = w * 0.5 ** (a + b + 1.0)
    return u, w


def _disk_rule(dom, nu, radial_order, angular_order):
    c = normalization_constant(dom, nu)
    u, wu = _jacobi01(radial_order, nu, 0.0)
    rho = np.sqrt(u)
    theta = 2.0 * np.pi * (np.arange(angular_order) + 0.5) / angular_order
    pts = (rho[:, None] * np.exp(1j * theta)[None, :]).ravel()
    # dA = (1/2) du dtheta; the Jacobi weight already carries (1-u)^nu
    w = np.repeat(wu * 0.5, angular_order) * (2.0 * np.pi / angular_order) * c
    return pts.reshape(-1, 1), w


def _simplex_grid(n: int, order: int):
    """Duffy-type tensor rule for the open simplex sigma_i >= 0, sum < 1 in R^{n-1}."""
    if n == 1:
        return np.zeros((1, 0)), np.ones(1)
    u, wu = _jacobi01(order, 0.0, 0.0)
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    for axis in range(n - 1):
        # remaining mass after previous coordinates
        rem = 1.0 - pts.sum(axis=1)
        new_pts = []
        new_wts = []
        for i in range(len(pts)):
            coords = rem[i] * u
            block = np.hstack([np.repeat(pts[i][None, :], order, axis=0),
                               coords[:, None]])
            new_pts.append(block)
            new_wts.append(wts[i] * wu * rem[i])
        pts = np.vstack(new_pts)
        wts = np.concatenate(new_wts)
    return pts, wts


def _ball_rule(dom, nu, radial_order, angular_order):
    n = dom.n
    c = normalization_constant(dom, nu)
    u, wu = _jacobi01(radial_order, nu, float(n - 1))
    rho = np.sqrt(u)
    # sphere S^{2n-1}: |zeta_i|^2 = sigma_i on the simplex, phases on the torus
    sorder = max(2, angular_order // 2)
    sig, wsig = _simplex_grid(n, sorder)
    sigma_full = np.hstack([sig, 1.0 - sig.sum(axis=1, keepdims=True)])
    theta = 2.0 * np.pi * (np.arange(angular_order) + 0.5) / angular_order
    phase = np.exp(1j * theta)
    # tensor over n phase circles
    mesh = np.stack(np.meshgrid(*([phase] * n), indexing="ij"), axis=-1).reshape(-1, n)
    zeta = np.sqrt(np.clip(sigma_full, 0.0, None))[:, None, :] * mesh[None, :, :]
    zeta = zeta.reshape(-1, n)
    wz = np.repeat(wsig, len(mesh)) * (2.0 * np.pi / angular_order) ** n * 2.0 ** (1 - n)
    pts = (rho[:, None, None] * zeta[None, :, :]).reshape(-1, n)
    # dv = rho^{2n-1} drho dS = (1/2) u^{n-1} du dS; the Jacobi weight carries
    # u^{n-1} (1-u)^nu
    w = np.repeat(wu * 0.5, len(zeta)) * np.tile(wz, radial_order) * c
    return pts, w


def _matrix_ball_rule(dom, nu, radial_order, angular_order, haar_samples, seed):
    c = normalization_constant(dom, nu)
    s, ws = _jacobi01(radial_order, nu, 3.0)      # weight s^3 (1-s)^nu
    tau, wtau = _jacobi01(radial_order, 2.0, 0.0)  # weight (1-tau)^2
    # int F dv_nu = c pi^4 int int F(sqrt(s), sqrt(s tau))
    #                       (1-s)^nu (1-s tau)^nu s^3 (1-tau)^2 dtau ds
    S, T = np.meshgrid(s, tau, indexing="ij")
    W = np.outer(ws, wtau) * (1.0 - S * T) ** nu
    t1 = np.sqrt(S).ravel()
    t2 = np.sqrt(S * T).ravel()
    wr = (c * np.pi ** 4) * W.ravel()
    rng = np.random.default_rng(seed)
    diag = np.zeros((len(t1), 2, 2), dtype=np.complex128)
    diag[:, 0, 0] = t1
    diag[:, 1, 1] = t2
    if haar_samples <= 1:
        pts = diag
        w = wr
    else:
        U = unitary_group.rvs(2, size=haar_samples, random_state=rng)
        V = unitary_group.rvs(2, size=haar_samples, random_state=rng)
        Vh = np.conj(V.transpose(0, 2, 1))
        pts = np.einsum("kab,pbc,kcd->pkad", U, diag, Vh).reshape(-1, 2, 2)
        w = np.repeat(wr / haar_samples, haar_samples)
    return pts, w


def default_orders(dom: DomainSpec) -> tuple[int, int]:
    """Default (radial, angular) orders per domain.

    Disk: 60 radial Gauss-Jacobi nodes, 128 angles (accuracy budget ~1e-10
    for polynomial symbols up to degree ~20).  Balls: 32 radial nodes with a
    strength-15 sphere factor.  Matrix ball: 40x40 singular-value grid.
    """
    if dom.kind == "disk":
        return 60, 128
    if dom.kind == "ball":
        return 32, 16
    return 40, 16


def rule_for(dom: DomainSpec, nu: float, radial_order: int | None = None,
             angular_order: int | None = None, **kw) -> QuadratureRule:
    ro, ao = default_orders(dom)
    return build_rule(dom, float(nu), radial_order or ro, angular_order or ao, **kw)


@lru_cache(maxsize=64)
def build_rule(dom: DomainSpec, nu: float, radial_order: int = 60,
               angular_order: int = 128, haar_samples: int = 1,
               seed: int = 7) -> QuadratureRule:
    """Tensor rule for dv_nu; normalization certified on construction."""
    if radial_order < 1 or angular_order < 1:
        raise ValueError("orders must be >= 1")
    if nu <= -1.0:
        raise NotAdmissibleError("nu must exceed -1")
    if dom.kind == "disk":
        pts, w = _disk_rule(dom, nu, radial_order, angular_order)
        exact_radial = False
    elif dom.kind == "ball":
        pts, w = _ball_rule(dom, nu, radial_order, angular_order)
        exact_radial = False
    elif dom.kind == "matrix_ball":
        pts, w = _matrix_ball_rule(dom, nu, radial_order, angular_order,
                                   haar_samples, seed)
        exact_radial = haar_samples <= 1
    else:  # pragma: no cover
        raise ValueError(f"unsupported domain kind {dom.kind}")
    rule = QuadratureRule(dom, float(nu), pts, w, radial_order, angular_order,
                          exact_radial_only=exact_radial)
    total = float(np.sum(w))
    rule.meta["normalization_defect"] = abs(total - 1.0)
    return rule


def integrate(rule: QuadratureRule, f) -> complex:
    """Sum of weights times integrand values against dv_nu.

    Summation is numpy's pairwise reduction in fixed node order, so results
    are bit-reproducible for identical rules.
    """
    vals = np.asarray(f(rule.eval_points()), dtype=np.complex128)
    if vals.shape != (rule.npoints,):
        vals = vals.reshape(rule.npoints)
    if not np.all(np.isfinite(vals)):
        raise AccuracyError("integrand produced non-finite values at quadrature nodes")
    return complex(np.sum(rule.weights * vals))


def node_values(rule: QuadratureRule, f) -> np.ndarray:
    vals = np.asarray(f(rule.eval_points()), dtype=np.complex128).reshape(rule.npoints)
    if not np.all(np.isfinite(vals)):
        raise AccuracyError("integrand produced non-finite values at quadrature nodes")
    return vals
