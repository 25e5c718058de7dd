"""Constructive geometry of the classical bounded symmetric domains.

Supported domains: the unit disk, the unit ball of C^n and the 2x2 matrix
ball (operator-norm unit ball of 2x2 complex matrices).  Each carries its
rank ``r``, root multiplicities ``a``, ``b`` and genus ``g = a(r-1)+b+2``.

The central object is the determinant function h(z, w), holomorphic in z and
antiholomorphic in w, pinned down by its diagonal h(z,z) = prod(1 - t_j^2)
over the polar singular values t_j.  Everything else (kernels, measures, the
invariant metric, the geodesic symmetries phi_z) is built from h:

* disk/ball:   h(z, w) = 1 - <z, w>
* matrix ball: h(Z, W) = det(I - Z W*)

Distances use the metric obtained from -g d d-bar log h(z,z); we take the
hermitian form itself as the squared line element (no extra factor 2), so on
the disk beta(0, s) = sqrt(2) * artanh(s).  Only distance *ratios* matter
downstream, so the convention is internal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import BoundaryPointError, DimensionMismatchError

INTERIOR_TOL = 1e-13  # points with max t_j >= 1 - tol are treated as boundary


@dataclass(frozen=True)
class DomainSpec:
    """A classical bounded symmetric domain with its numerical invariants."""

    kind: str  # "disk" | "ball" | "matrix_ball"
    n: int     # complex dimension
    r: int     # rank
    a: int     # root multiplicity
    b: int     # root multiplicity

    @property
    def g(self) -> int:
        return self.a * (self.r - 1) + self.b + 2

    @property
    def shape(self):
        return (2, 2) if self.kind == "matrix_ball" else (self.n,)

    def __str__(self):
        return {"disk": "disk", "ball": f"ball{self.n}", "matrix_ball": "matrixball"}[self.kind]


def unit_disk() -> DomainSpec:
    return DomainSpec("disk", 1, 1, 0, 0)


def unit_ball(n: int) -> DomainSpec:
    if n < 1:
        raise ValueError("ball dimension must be >= 1")
    if n == 1:
        return unit_disk()
    return DomainSpec("ball", n, 1, 0, n - 1)


def matrix_ball() -> DomainSpec:
    return DomainSpec("matrix_ball", 4, 2, 2, 0)


@lru_cache(maxsize=None)
def from_name(name: str) -> DomainSpec:
    name = name.lower()
    if name in ("disk", "unitdisk", "ball1"):
        return unit_disk()
    if name.startswith("ball"):
        return unit_ball(int(name[4:]))
    if name in ("matrixball", "matrix_ball", "mball22"):
        return matrix_ball()
    raise ValueError(f"unknown domain {name!r}")


def as_point(dom: DomainSpec, z) -> np.ndarray:
    """Coerce scalars/lists to the domain's point shape and check dimensions."""
    z = np.asarray(z, dtype=np.complex128)
    if dom.kind == "matrix_ball":
        if z.shape[-2:] != (2, 2):
            if z.shape[-1:] == (4,):
                z = z.reshape(z.shape[:-1] + (2, 2))
            else:
                raise DimensionMismatchError(f"expected 2x2 matrix, got shape {z.shape}")
        return z
    if z.ndim == 0:
        if dom.n != 1:
            raise DimensionMismatchError(f"scalar point on {dom}")
        return z.reshape(1)
    if z.shape[-1] != dom.n:
        raise DimensionMismatchError(f"expected {dom.n} coordinates, got shape {z.shape}")
    return z


def polar_diagonal(dom: DomainSpec, z) -> np.ndarray:
    """Singular values t_1 >= ... >= t_r of the polar decomposition of z."""
    z = as_point(dom, z)
    if dom.kind == "matrix_ball":
        return _kernels.sv2x2(z)
    return np.linalg.norm(z, axis=-1, keepdims=True)


def polar_radius(dom: DomainSpec, z) -> np.ndarray:
    """Largest polar singular value t_1 (membership indicator: t_1 < 1)."""
    t = polar_diagonal(dom, z)
    return t[..., 0]


def is_interior(dom: DomainSpec, z, tol: float = INTERIOR_TOL) -> bool:
    return bool(np.all(polar_radius(dom, z) < 1.0 - tol))


def _require_interior(dom, z, what="point"):
    if not is_interior(dom, z):
        raise BoundaryPointError(f"{what} is not in the open domain")


def jordan_det(dom: DomainSpec, z, w):
    """h(z, w); holomorphic in z, antiholomorphic in w, h(z, 0) = 1.

    Broadcasts over leading axes of both arguments.
    """
    z = as_point(dom, z)
    w = as_point(dom, w)
    if dom.kind == "matrix_ball":
        m = np.broadcast_shapes(z.shape[:-2], w.shape[:-2])
        zw = z @ np.conj(np.swapaxes(w, -1, -2))
        eye = np.eye(2, dtype=np.complex128)
        a = eye - zw
        det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        return det.reshape(m) if m else det[()]
    out = 1.0 - np.sum(z * np.conj(w), axis=-1)
    return out


def jordan_det_power(dom: DomainSpec, z, w, lam: float):
    """h(z, w)^lam on the branch that is 1 at w=0 and positive on the diagonal.

    For the disk and ball, h takes values in the right half-plane whenever one
    argument is interior, so the principal power is the continuous branch.
    For the matrix ball the argument of h is tracked along the radial path
    s -> h(z, s w) and unwrapped.
    """
    h = jordan_det(dom, z, w)
    if np.any(h == 0):
        raise ZeroDivisionError("h(z, w) = 0: both arguments on the boundary")
    if dom.kind != "matrix_ball":
        return np.exp(lam * np.log(h))
    # path tracking: h(z, s*w) = det(I - s Z W*) is quadratic in s; sample and
    # unwrap the argument from s=0 (where h=1) to s=1
    z = as_point(dom, z)
    w = as_point(dom, w)
    s = np.linspace(0.0, 1.0, 65)
    zw = z @ np.conj(np.swapaxes(w, -1, -2))
    eye = np.eye(2, dtype=np.complex128)
    a = eye - s[(...,) + (None,) * (zw.ndim)] * zw[None]
    dets = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    angle = np.unwrap(np.angle(dets), axis=0)[-1]
    return np.exp(lam * (np.log(np.abs(h)) + 1j * angle))


def _herm_sqrt_2x2(M, inverse=False):
    vals, vecs = np.linalg.eigh(M)
    vals = np.clip(vals.real, 1e-300, None)
    d = 1.0 / np.sqrt(vals) if inverse else np.sqrt(vals)
    return (vecs * d[..., None, :]) @ np.conj(np.swapaxes(vecs, -1, -2))


def geodesic_symmetry(dom: DomainSpec, z, w):
    """The involutive symmetry phi_z evaluated at w (phi_z(0)=z, phi_z(z)=0)."""
    z = as_point(dom, z)
    w = as_point(dom, w)
    _require_interior(dom, z, "base point")
    _require_interior(dom, w, "argument")
    if dom.kind == "matrix_ball":
        zz = z @ np.conj(np.swapaxes(z, -1, -2))
        z_z = np.conj(np.swapaxes(z, -1, -2)) @ z
        left = _herm_sqrt_2x2(np.eye(2) - zz, inverse=True)
        right = _herm_sqrt_2x2(np.eye(2) - z_z)
        eye = np.eye(2, dtype=np.complex128)
        inner = np.linalg.inv(eye - np.conj(np.swapaxes(z, -1, -2)) @ w)
        return left @ (z - w) @ inner @ right
    zn2 = np.sum(np.abs(z) ** 2, axis=-1)
    if np.all(zn2 == 0):
        return -w
    ip = np.sum(w * np.conj(z), axis=-1)  # <w, z>
    denom = 1.0 - ip
    proj = (ip / zn2)[..., None] * z  # projection of w onto span(z)
    s = np.sqrt(1.0 - zn2)[..., None]
    return (z - proj - s * (w - proj)) / denom[..., None]


def bergman_distance(dom: DomainSpec, z, w) -> float:
    """Invariant distance beta(z, w) >= 0.

    Computed through the symmetry: beta(z, w) = beta(0, phi_z(w)), and from
    the origin the metric splits along the polar axes, giving
    beta(0, x) = sqrt(g) * ||artanh t(x)||_2.
    """
    z = as_point(dom, z)
    w = as_point(dom, w)
    _require_interior(dom, z, "first point")
    _require_interior(dom, w, "second point")
    x = geodesic_symmetry(dom, z, w)
    t = polar_diagonal(dom, x)
    t = np.clip(t, 0.0, 1.0 - 1e-16)
    return np.sqrt(dom.g) * np.linalg.norm(np.arctanh(t), axis=-1)


def pairwise_distance(dom: DomainSpec, zs, ws) -> np.ndarray:
    """Distance matrix beta(zs_i, ws_j); hot path for covers and profiles."""
    sqrtg = float(np.sqrt(dom.g))
    if dom.kind == "disk":
        return _kernels.pairwise_beta_disk(np.ravel(zs), np.ravel(ws), sqrtg)
    if dom.kind == "ball":
        Z = np.asarray(zs, dtype=np.complex128).reshape(-1, dom.n)
        W = np.asarray(ws, dtype=np.complex128).reshape(-1, dom.n)
        return _kernels.pairwise_beta_ball(Z, W, sqrtg)
    zs = as_point(dom, np.asarray(zs))
    ws = as_point(dom, np.asarray(ws))
    zflat = zs.reshape(-1, 2, 2)
    wflat = ws.reshape(-1, 2, 2)
    out = np.empty((len(zflat), len(wflat)))
    for i, zi in enumerate(zflat):
        x = geodesic_symmetry(dom, zi, wflat)
        t = np.clip(_kernels.sv2x2(x), 0.0, 1.0 - 1e-16)
        out[i] = np.sqrt(dom.g) * np.linalg.norm(np.arctanh(t), axis=-1)
    return out


def check_admissible(dom: DomainSpec, alpha: float, nu: float, p: float) -> bool:
    """Admissibility of (alpha, nu, p): p(alpha+1) > nu+1+(r-1)a/2 > p(r-1)a/2."""
    if not (1.0 < p < np.inf) or not (nu > -1.0):
        return False
    half = (dom.r - 1) * dom.a / 2.0
    mid = nu + 1.0 + half
    return bool(p * (alpha + 1.0) > mid > p * half)


def random_interior(dom: DomainSpec, rng, size: int, tmax: float = 0.8) -> np.ndarray:
    """Sample points with polar radius <= tmax (uniform-ish, for tests/grids)."""
    if dom.kind == "matrix_ball":
        out = np.empty((size, 2, 2), dtype=np.complex128)
        got = 0
        while got < size:
            cand = (rng.uniform(-1, 1, (4 * size, 2, 2))
                    + 1j * rng.uniform(-1, 1, (4 * size, 2, 2)))
            t1 = _kernels.sv2x2(cand)[..., 0]
            good = cand[t1 <= tmax]
            take = min(size - got, len(good))
            out[got:got + take] = good[:take]
            got += take
        return out
    raw = rng.normal(size=(size, dom.n)) + 1j * rng.normal(size=(size, dom.n))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    radii = tmax * rng.uniform(0, 1, size) ** (1.0 / (2 * dom.n))
    return raw * radii[:, None]
