"""Bergman-metric covers, partitions of unity, band and localization diagnostics.

Operators are represented here at the node level: an (N, N) matrix acting on
quadrature node values of L^2_nu functions, so that multiplication operators
(indicators in particular) are diagonal masks and the projection is the
honest kernel integral operator, not its basis compression.  Norms are exact
at quadrature resolution: conjugating by diag(sqrt(w)) turns the L^2_nu
operator norm into a spectral norm of a weighted block, so sup/inf over
nested support sets inherit their defining inequalities by construction.

Covers are greedy nets in the invariant metric with spacing 1/(3t), their
cells the induced Voronoi regions restricted to the node set; the partition
functions are distance mollifications

    phi_j = m_j / sum_k m_k,  m_j = max(0, 1 - 3t dist(., B_j)),
    psi_j = clip(3 - 3t dist(., B_j), 0, 1),

which satisfy the summation, support, plateau and Lipschitz properties by
construction; the build certifies them on samples and rejects otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bergman import BasisSpec, OperatorMatrix
from .domains import DomainSpec, jordan_det_power, pairwise_distance, polar_radius
from .errors import AccuracyError
from .quadrature import QuadratureRule, WeightContext, build_rule
from .symbols import SymbolSpec
from .toeplitz import ToeplitzElement


# ---------------------------------------------------------------------------
# node-level operators
# ---------------------------------------------------------------------------

RESOLVED_EXTENT = 0.95  # node calculus is honest only where the rule resolves h^{-s}


@dataclass
class NodeOperator:
    """Matrix action on L^2_nu node values over the resolved truncated region.

    ``points``/``weights`` are the rule's nodes restricted to polar radius
    <= extent; the quadrature can resolve the projection kernel there, so
    weighted-block spectral norms are trustworthy operator-norm estimates.
    The ideal operator on the full domain is the documented limit object.
    """

    matrix: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    dom: DomainSpec
    extent: float
    label: str = ""

    @property
    def n(self):
        return self.matrix.shape[0]


def band_rule(dom: DomainSpec, nu: float) -> QuadratureRule:
    if dom.kind == "disk":
        return build_rule(dom, nu, 30, 64)
    return build_rule(dom, nu, 16, 8)


def _resolved(rule: QuadratureRule, extent: float):
    pts = rule.points.reshape(-1, rule.dom.n) if rule.dom.kind != "matrix_ball" \
        else rule.points
    keep = polar_radius(rule.dom, pts) <= extent
    return pts[keep], rule.weights[keep]


def node_projection(ctx: WeightContext, rule: QuadratureRule,
                    extent: float = RESOLVED_EXTENT) -> NodeOperator:
    """The weighted Bergman projection compressed to the resolved region."""
    s = ctx.nu + ctx.dom.g
    pts, w = _resolved(rule, extent)
    kern = jordan_det_power(ctx.dom, pts[:, None], pts[None, :], -s)
    return NodeOperator(kern * w[None, :], pts, w, ctx.dom, extent, "P")


def node_multiplication(f, rule: QuadratureRule, label: str = "M_f",
                        extent: float = RESOLVED_EXTENT) -> NodeOperator:
    pts, w = _resolved(rule, extent)
    vals = np.asarray(f(pts), dtype=np.complex128)
    return NodeOperator(np.diag(vals), pts, w, rule.dom, extent, label)


def node_rank_one_kernel(kern, rule: QuadratureRule,
                         extent: float = RESOLVED_EXTENT) -> NodeOperator:
    """f -> <f, k> k for an explicit kernel function k."""
    pts, w = _resolved(rule, extent)
    vals = np.asarray(kern(pts))
    return NodeOperator(np.outer(vals, np.conj(vals) * w), pts, w, rule.dom,
                        extent, "k(x)k")


def node_operator(A, basis: BasisSpec, rule: QuadratureRule | None = None,
                  extent: float = RESOLVED_EXTENT) -> NodeOperator:
    """Node representation of a Toeplitz element (P M_f P ...) or basis matrix."""
    rule = rule or band_rule(basis.dom, basis.ctx.nu)
    if isinstance(A, SymbolSpec):
        A = ToeplitzElement.toeplitz(A)
    if isinstance(A, ToeplitzElement):
        proj = node_projection(basis.ctx, rule, extent)
        P = proj.matrix
        total = np.zeros_like(P)
        for c, word in zip(A.coeffs, A.words):
            part = P.copy()
            for sym in word:
                part = part @ np.diag(np.asarray(sym(proj.points))) @ P
            total += c * part
        return NodeOperator(total, proj.points, proj.weights, basis.dom, extent,
                            A.label)
    if isinstance(A, OperatorMatrix):
        pts, w = _resolved(rule, extent)
        E = A.basis.evaluate(pts)
        synth = E @ A.entries @ (E.conj().T * w[None, :])
        return NodeOperator(synth, pts, w, basis.dom, extent, A.label)
    raise TypeError("unsupported operator for node representation")


def _weighted(matrix: np.ndarray, w: np.ndarray) -> np.ndarray:
    sq = np.sqrt(w)
    return matrix * sq[:, None] / sq[None, :]


def op_norm(nop: NodeOperator, rows=None, cols=None, smallest: bool = False) -> float:
    """L^2_nu operator norm of M_{chi_rows} A M_{chi_cols} at node resolution."""
    B = _weighted(nop.matrix, nop.weights)
    if rows is not None:
        B = B[np.asarray(rows)]
    if cols is not None:
        B = B[:, np.asarray(cols)]
    if B.size == 0:
        return 0.0
    sv = np.linalg.svd(B, compute_uv=False)
    return float(sv[-1] if smallest else sv[0])




# ---------------------------------------------------------------------------
# covers
# ---------------------------------------------------------------------------

@dataclass
class MetricCover:
    dom: DomainSpec
    t: float
    extent: float
    centers: np.ndarray
    node_points: np.ndarray
    assignments: np.ndarray
    offsets: np.ndarray            # CSR boundaries into sample_points
    sample_points: np.ndarray      # node points grouped by cell
    N: int
    C_t: float
    spacing: float

    @property
    def ncells(self) -> int:
        return len(self.offsets) - 1

    def dist_to_cells(self, points) -> np.ndarray:
        """beta-distance from each point to each cell's node sample."""
        pts = np.asarray(points)
        if self.dom.kind == "disk":
            return _kernels.min_beta_disk_cells(
                np.ravel(pts), np.ravel(self.sample_points),
                self.offsets, float(np.sqrt(self.dom.g)))
        full = pairwise_distance(self.dom, pts, self.sample_points)
        out = np.empty((full.shape[0], self.ncells))
        for j in range(self.ncells):
            out[:, j] = full[:, self.offsets[j]:self.offsets[j + 1]].min(axis=1)
        return out

    def manifest(self) -> dict:
        return {"t": self.t, "extent": self.extent, "ncells": self.ncells,
                "N": self.N, "C_t": self.C_t, "spacing": self.spacing}

    def to_json(self) -> str:
        import json
        centers = self.centers.reshape(self.ncells, -1)
        return json.dumps({
            "schema": "metric-cover/1",
            **self.manifest(),
            "centers": [[[float(c.real), float(c.imag)] for c in row]
                        for row in centers],
        }, sort_keys=True)


def build_cover(dom: DomainSpec, t: float, extent: float,
                rule: QuadratureRule | None = None, points=None,
                nu: float = 0.0) -> MetricCover:
    """Greedy net cover with spacing 1/(3t) over the truncated domain.

    N is the measured overlap constant (cells within distance 1/t of a
    node), C(t) the measured cell diameter bound.
    """
    if not (0.0 < t < 1.0):
        raise ValueError("t must be in (0, 1)")
    if extent >= 1.0:
        raise ValueError("extent must stay strictly inside the domain")
    if points is None:
        rule = rule or band_rule(dom, nu)
        points = (rule.points.reshape(-1, dom.n) if dom.kind != "matrix_ball"
                  else rule.points)
    pts = np.asarray(points)
    radii = polar_radius(dom, pts)
    keep = radii <= extent
    pts = pts[keep]
    spacing = 1.0 / (3.0 * t)

    # greedy farthest-point net, seeded at the innermost node
    start = int(np.argmin(radii[keep]))
    centers_idx = [start]
    dmin = pairwise_distance(dom, pts[start:start + 1], pts)[0]
    while True:
        far = int(np.argmax(dmin))
        if dmin[far] <= spacing:
            break
        centers_idx.append(far)
        dmin = np.minimum(dmin, pairwise_distance(dom, pts[far:far + 1], pts)[0])
    centers = pts[np.array(centers_idx)]

    D = pairwise_distance(dom, pts, centers)
    assignments = np.argmin(D, axis=1)
    order = np.argsort(assignments, kind="stable")
    sample_points = pts[order]
    counts = np.bincount(assignments, minlength=len(centers))
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    cover = MetricCover(dom, t, extent, centers, pts, assignments, offsets,
                        sample_points, 0, 0.0, spacing)
    dist = cover.dist_to_cells(pts)
    cover.N = int(np.max(np.sum(dist <= 1.0 / t, axis=1)))
    diam = 0.0
    for j in range(cover.ncells):
        cell = sample_points[offsets[j]:offsets[j + 1]]
        if len(cell) > 1:
            diam = max(diam, float(pairwise_distance(dom, cell, cell).max()))
    cover.C_t = diam
    return cover


# ---------------------------------------------------------------------------
# partitions of unity
# ---------------------------------------------------------------------------

@dataclass
class PartitionOfUnity:
    cover: MetricCover
    certificate: dict = field(default_factory=dict)

    @property
    def t(self):
        return self.cover.t

    @property
    def r_t(self) -> float:
        """sup_j diam of supp phi_j: cell diameter plus twice the support margin."""
        return self.cover.C_t + 2.0 / (3.0 * self.t)

    def bumps(self, points) -> np.ndarray:
        d = self.cover.dist_to_cells(points)
        return np.clip(1.0 - 3.0 * self.t * d, 0.0, None)

    def phi(self, points) -> np.ndarray:
        m = self.bumps(points)
        tot = m.sum(axis=1, keepdims=True)
        if np.any(tot <= 0):
            raise AccuracyError("partition evaluated outside the covered region")
        return m / tot

    def phi_safe(self, points) -> np.ndarray:
        """phi extended by zero outside the covered region (for node grids)."""
        m = self.bumps(points)
        tot = m.sum(axis=1, keepdims=True)
        return np.divide(m, tot, out=np.zeros_like(m), where=tot > 0)

    def psi(self, points) -> np.ndarray:
        d = self.cover.dist_to_cells(points)
        return np.clip(3.0 - 3.0 * self.t * d, 0.0, 1.0)

    def xi_membership(self, points, k: int) -> np.ndarray:
        """Indicator of the inflation sets Xi_{j,t,k} = {dist <= k/(3t)}."""
        d = self.cover.dist_to_cells(points)
        return d <= k / (3.0 * self.t)


def build_partition(cover: MetricCover, sample_pairs: int = 400,
                    seed: int = 5) -> PartitionOfUnity:
    """Distance-mollified partition; certifies the six defining properties.

    Raises with the failing pair if any sampled property check fails.
    """
    part = PartitionOfUnity(cover)
    pts = cover.node_points
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(pts), size=(sample_pairs, 2))
    za, zb = pts[idx[:, 0]], pts[idx[:, 1]]

    phi_a, phi_b = part.phi(za), part.phi(zb)
    psi_a, psi_b = part.psi(za), part.psi(zb)
    summ = np.abs(phi_a.sum(axis=1) - 1.0).max()
    if summ > 1e-12:
        raise AccuracyError(f"partition property (a) failed: sum defect {summ:.2e}")

    d1 = cover.dist_to_cells(za)
    if np.any((phi_a > 0) & (d1 > 1.0 / (3.0 * cover.t) + 1e-12)):
        raise AccuracyError("partition property (b) failed: phi support leak")
    if np.any((psi_a > 0) & (d1 > 1.0 / cover.t + 1e-12)):
        raise AccuracyError("partition property (e) failed: psi support leak")
    plateau = psi_a[d1 <= 2.0 / (3.0 * cover.t)]
    if plateau.size and np.min(plateau) < 1.0 - 1e-12:
        raise AccuracyError("partition property (d) failed: psi plateau")

    beta_ab = np.array([pairwise_distance(cover.dom, a[None], b[None])[0, 0]
                        for a, b in zip(za, zb)])
    ok = beta_ab > 1e-9
    lip_phi = np.abs(phi_a - phi_b).max(axis=1)[ok] / beta_ab[ok]
    lip_psi = np.abs(psi_a - psi_b).max(axis=1)[ok] / beta_ab[ok]
    bound_phi = 6.0 * cover.N * cover.t
    bound_psi = 3.0 * cover.t
    if np.any(lip_phi > bound_phi * (1 + 1e-9)):
        bad = int(np.argmax(lip_phi))
        raise AccuracyError(f"partition property (c) failed at pair {bad}: "
                            f"quotient {lip_phi[bad]:.3f} > {bound_phi:.3f}")
    if np.any(lip_psi > bound_psi * (1 + 1e-9)):
        bad = int(np.argmax(lip_psi))
        raise AccuracyError(f"partition property (f) failed at pair {bad}: "
                            f"quotient {lip_psi[bad]:.3f} > {bound_psi:.3f}")
    part.certificate = {
        "sum_defect": float(summ),
        "lip_phi_max": float(lip_phi.max()) if lip_phi.size else 0.0,
        "lip_phi_bound": bound_phi,
        "lip_psi_max": float(lip_psi.max()) if lip_psi.size else 0.0,
        "lip_psi_bound": bound_psi,
        "pairs": int(sample_pairs),
    }
    return part


# ---------------------------------------------------------------------------
# band profiles and commutators
# ---------------------------------------------------------------------------

def band_profile(nop: NodeOperator, distances=(1.0, 2.0, 3.0, 4.0),
                 cover: MetricCover | None = None, refine_top: int = 8):
    """sup over cell pairs (E, F) at distance >= omega of ||M_chiE A M_chiF||.

    All pairs are screened by the (cheap, exact) Frobenius norms of their
    weighted blocks; per distance bin the strongest candidates are refined
    with exact spectral norms.  One refined pair set serves every omega, so
    the profile is non-increasing by construction.
    """
    cover = cover or build_cover(nop.dom, 0.5, nop.extent, points=nop.points)
    B = _weighted(nop.matrix, nop.weights)
    order = np.argsort(cover.assignments, kind="stable")
    Bo = np.abs(B[np.ix_(order, order)]) ** 2
    off = cover.offsets
    # Frobenius^2 of every cell-pair block via two reduceat passes
    rows = np.add.reduceat(Bo, off[:-1], axis=0)
    frob2 = np.add.reduceat(rows, off[:-1], axis=1)

    d_nodes = cover.dist_to_cells(cover.sample_points)
    cell_dist = np.minimum.reduceat(d_nodes, off[:-1], axis=0)

    refine = set()
    for om in distances:
        cand = np.argwhere(cell_dist >= om)
        if len(cand) == 0:
            continue
        scores = frob2[cand[:, 0], cand[:, 1]]
        for k in np.argsort(scores)[::-1][:refine_top]:
            refine.add((int(cand[k, 0]), int(cand[k, 1])))
    spectral = {}
    for i, j in refine:
        ridx = order[off[i]:off[i + 1]]
        cidx = order[off[j]:off[j + 1]]
        sv = np.linalg.svd(B[np.ix_(ridx, cidx)], compute_uv=False)
        spectral[(i, j)] = float(sv[0])
    profile = []
    for om in distances:
        vals = [v for (i, j), v in spectral.items() if cell_dist[i, j] >= om]
        profile.append((float(om), float(max(vals)) if vals else 0.0))
    return profile


def _commutator_norm(B: np.ndarray, phi: np.ndarray) -> float:
    """||B diag(phi) - diag(phi) B||_2 via Lanczos on the implicit matrix."""
    if not np.any(phi > 0):
        return 0.0
    n = B.shape[0]
    if n < 200:
        return float(np.linalg.norm(B * phi[None, :] - phi[:, None] * B, 2))
    from scipy.sparse.linalg import LinearOperator, svds
    Bh = B.conj().T

    def mv(v):
        v = np.ravel(v)
        return B @ (phi * v) - phi * (B @ v)

    def rmv(v):
        v = np.ravel(v)
        return phi * (Bh @ v) - Bh @ (phi * v)

    X = LinearOperator((n, n), matvec=mv, rmatvec=rmv, dtype=np.complex128)
    rng = np.random.default_rng(13)
    v0 = rng.normal(size=n)
    v0 /= np.linalg.norm(v0)
    try:
        s = svds(X, k=1, v0=v0, return_singular_vectors=False, maxiter=300)
        return float(s[0])
    except Exception:
        # degenerate commutators (phi constant on the operator's range) land here
        return float(np.linalg.norm(B * phi[None, :] - phi[:, None] * B, 2))


def commutator_decay(nop: NodeOperator, partition: PartitionOfUnity,
                     pexp: float = 2.0, cell_sample: int = 24) -> float:
    """sup over sampled cells of ||[A, M_{phi_j^{1/p}}]|| at node resolution."""
    phi_nodes = partition.phi_safe(nop.points)
    ncells = partition.cover.ncells
    step = max(1, ncells // cell_sample)
    B = _weighted(nop.matrix, nop.weights)
    worst = 0.0
    for j in range(0, ncells, step):
        a = phi_nodes[:, j] ** (1.0 / pexp)
        worst = max(worst, _commutator_norm(B, a))
    return float(worst)


# ---------------------------------------------------------------------------
# localization norms
# ---------------------------------------------------------------------------

@dataclass
class LocalizationNorms:
    norm: float          # ||A|_F||
    triple_t: float      # |||A|_F|||_t
    nu: float            # nu(A|_F)
    nu_t: float          # nu_t(A|_F)


def localization_norms(nop: NodeOperator, F, t: float,
                       cover: MetricCover | None = None,
                       max_centers: int = 64) -> LocalizationNorms:
    """Quadrature estimates of the restricted norms and lower norms.

    ``F`` is a boolean node mask or a predicate over points.  The sup/inf
    structure is evaluated over supports {D(w, r_t) cap F} for ball centers w
    running through the cover's cell centers, so by construction
    triple_t <= norm and nu <= nu_t on every probe family.
    """
    dom = nop.dom
    pts = nop.points
    if callable(F):
        mask = np.asarray(F(pts), dtype=bool)
    else:
        mask = np.asarray(F, dtype=bool)
    if not mask.any():
        raise ValueError("empty support region F")
    cover = cover or build_cover(dom, t, nop.extent, points=pts)
    part = PartitionOfUnity(cover)
    r_t = part.r_t
    cols_F = np.flatnonzero(mask)
    norm_F = op_norm(nop, cols=cols_F)
    nu_F = op_norm(nop, cols=cols_F, smallest=True)

    centers = cover.centers
    if len(centers) > max_centers:
        step = max(1, len(centers) // max_centers)
        centers = centers[::step]
    dists = pairwise_distance(dom, centers, pts)
    triple, nu_t = 0.0, np.inf
    for row in dists:
        cols = np.flatnonzero((row <= r_t) & mask)
        if cols.size == 0:
            continue
        triple = max(triple, op_norm(nop, cols=cols))
        nu_t = min(nu_t, op_norm(nop, cols=cols, smallest=True))
    if not np.isfinite(nu_t):
        raise ValueError("no probe support intersected F: enlarge F or shrink t")
    return LocalizationNorms(norm_F, triple, nu_F, nu_t)
