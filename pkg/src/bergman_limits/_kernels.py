"""Hot numeric kernels with selectable backends.

Two implementations are kept for every kernel: a numba ``@njit`` version and a
pure-numpy version.  The numpy path is selected by setting the environment
variable ``BERGMAN_LIMITS_NO_NUMBA=1`` (or automatically when numba is not
importable).  ``benchmarks/bench_kernels.py`` compares the two.

Kernels here are deliberately free of package imports so they stay compilable
and easy to benchmark in isolation.
"""

import os
import warnings

import numpy as np

_DISABLED = os.environ.get("BERGMAN_LIMITS_NO_NUMBA", "").strip() in ("1", "true", "yes")

if not _DISABLED:
    try:
        # avoid probing the (possibly too-old) TBB layer; omp is always present here
        os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")
        warnings.filterwarnings("ignore", message=".*TBB.*")
        from numba import njit, prange

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def backend_name():
    return BACKEND


# ---------------------------------------------------------------------------
# pairwise hyperbolic distances (disk)
# ---------------------------------------------------------------------------

def _pairwise_beta_disk_np(z, w, sqrtg):
    num = np.abs(z[:, None] - w[None, :])
    den = np.abs(1.0 - np.conj(z)[:, None] * w[None, :])
    r = np.clip(num / den, 0.0, 1.0 - 1e-16)
    return sqrtg * np.arctanh(r)


def _pairwise_beta_ball_np(Z, W, sqrtg):
    G = Z @ W.conj().T
    hz = 1.0 - np.sum(np.abs(Z) ** 2, axis=1)
    hw = 1.0 - np.sum(np.abs(W) ** 2, axis=1)
    ratio = hz[:, None] * hw[None, :] / np.abs(1.0 - G) ** 2
    r = np.sqrt(np.clip(1.0 - ratio, 0.0, 1.0 - 1e-16))
    return sqrtg * np.arctanh(r)


def _min_beta_to_cells_np(points, samples, offsets, sqrtg, pairwise):
    full = pairwise(points, samples, sqrtg)
    ncells = len(offsets) - 1
    out = np.empty((len(points), ncells))
    for j in range(ncells):
        out[:, j] = full[:, offsets[j]:offsets[j + 1]].min(axis=1)
    return out


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _pairwise_beta_disk_nb(z, w, sqrtg):
        m, k = z.shape[0], w.shape[0]
        out = np.empty((m, k))
        for i in prange(m):
            zi = z[i]
            zc = np.conj(zi)
            for j in range(k):
                num = abs(zi - w[j])
                den = abs(1.0 - zc * w[j])
                r = num / den
                if r > 1.0 - 1e-16:
                    r = 1.0 - 1e-16
                out[i, j] = sqrtg * np.arctanh(r)
        return out

    @njit(cache=True, parallel=True)
    def _min_beta_disk_cells_nb(points, samples, offsets, sqrtg):
        m = points.shape[0]
        ncells = offsets.shape[0] - 1
        out = np.empty((m, ncells))
        for i in prange(m):
            zi = points[i]
            zc = np.conj(zi)
            for j in range(ncells):
                best = 1e300
                for s in range(offsets[j], offsets[j + 1]):
                    w = samples[s]
                    r = abs(zi - w) / abs(1.0 - zc * w)
                    if r > 1.0 - 1e-16:
                        r = 1.0 - 1e-16
                    d = sqrtg * np.arctanh(r)
                    if d < best:
                        best = d
                out[i, j] = best
        return out


def pairwise_beta_disk(z, w, sqrtg):
    """Matrix of Bergman distances between 1-d complex point sets."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    w = np.ascontiguousarray(w, dtype=np.complex128)
    if HAVE_NUMBA:
        return _pairwise_beta_disk_nb(z, w, float(sqrtg))
    return _pairwise_beta_disk_np(z, w, float(sqrtg))


def pairwise_beta_ball(Z, W, sqrtg):
    # the gram-matrix formulation is BLAS-bound; numpy beats a jitted loop here
    Z = np.ascontiguousarray(Z, dtype=np.complex128)
    W = np.ascontiguousarray(W, dtype=np.complex128)
    return _pairwise_beta_ball_np(Z, W, float(sqrtg))


def min_beta_disk_cells(points, samples, offsets, sqrtg):
    """Per point, Bergman distance to each cell (min over the cell's samples).

    ``samples`` is the concatenation of all cell sample points; ``offsets`` is
    the CSR-style boundary array of length ncells+1.
    """
    points = np.ascontiguousarray(points, dtype=np.complex128)
    samples = np.ascontiguousarray(samples, dtype=np.complex128)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    if HAVE_NUMBA:
        return _min_beta_disk_cells_nb(points, samples, offsets, float(sqrtg))
    return _min_beta_to_cells_np(points, samples, offsets, float(sqrtg),
                                 _pairwise_beta_disk_np)


# ---------------------------------------------------------------------------
# singular values of stacked 2x2 complex matrices
# ---------------------------------------------------------------------------

def _sv2x2_np(M):
    return np.linalg.svd(M, compute_uv=False)


if HAVE_NUMBA:

    @njit(cache=True)
    def _sv2x2_nb(M):
        m = M.shape[0]
        out = np.empty((m, 2))
        for i in range(m):
            a = (abs(M[i, 0, 0]) ** 2 + abs(M[i, 0, 1]) ** 2
                 + abs(M[i, 1, 0]) ** 2 + abs(M[i, 1, 1]) ** 2)
            det = M[i, 0, 0] * M[i, 1, 1] - M[i, 0, 1] * M[i, 1, 0]
            d = abs(det) ** 2
            disc = a * a - 4.0 * d
            if disc < 0.0:
                disc = 0.0
            disc = np.sqrt(disc)
            s1 = np.sqrt((a + disc) / 2.0)
            lo = (a - disc) / 2.0
            if lo < 0.0:
                lo = 0.0
            out[i, 0] = s1
            out[i, 1] = np.sqrt(lo)
        return out


def sv2x2(M):
    """Singular values (descending) of an (...,2,2) complex stack."""
    M = np.ascontiguousarray(M, dtype=np.complex128)
    shape = M.shape[:-2]
    flat = M.reshape(-1, 2, 2)
    if HAVE_NUMBA:
        out = _sv2x2_nb(flat)
    else:
        out = _sv2x2_np(flat)
    return out.reshape(shape + (2,))


# ---------------------------------------------------------------------------
# exact entries of shifted-symbol Toeplitz matrices on the disk
# ---------------------------------------------------------------------------
#
# For a polynomial symbol f(w, conj w) pushed through the disk involution
# phi_z, the matrix entries <(f o phi_z) e_k, e_l> reduce to single geometric
# series with rational-recurrence coefficients.  Summing those series is the
# hot loop near the boundary (|z| -> 1 needs O(1/(1-|z|^2)) terms), which is
# what makes quadrature useless there and this kernel necessary.

def _series_terms_needed(t2, extra_pow):
    if t2 <= 0.0:
        return 8
    n = int(np.ceil(42.0 / max(1e-300, -np.log(t2)))) + 8
    # polynomial growth of the binomial factors shifts the crossover point
    if extra_pow > 0:
        n = int(n + extra_pow * np.ceil(np.log(max(n, 2)) / max(1e-300, -np.log(t2))))
    return min(n, 6_000_000)


def _shifted_series_np(s0, delta, A, B, nu, t, nmax):
    n0 = max(0, -delta)
    m0 = n0 + delta
    b1 = 1.0
    for k in range(1, A):
        b1 *= (m0 + k) / k
    b2 = 1.0
    for k in range(1, B):
        b2 *= (n0 + k) / k
    raw = 1.0
    for k in range(1, s0 + n0 + 1):
        raw *= k / (k + nu + 1.0)
    first = b1 * b2 * raw * t ** (2.0 * n0 + delta)
    if first == 0.0:
        return 0.0
    n = np.arange(n0, n0 + nmax, dtype=np.float64)
    r = ((t * t) * (n + delta + A) / (n + delta + 1.0)
         * (n + B) / (n + 1.0)
         * (s0 + n + 1.0) / (s0 + n + nu + 2.0))
    terms = np.empty(nmax)
    terms[0] = 1.0
    np.cumprod(r[:-1], out=terms[1:])
    return first * float(terms.sum())


def _shifted_toeplitz_np(P, t, theta, nu, dim, norms, nmax):
    A = P.shape[0] - 1
    B = P.shape[1] - 1
    out = np.zeros((dim, dim), dtype=np.complex128)
    for lam in range(dim):
        for kap in range(dim):
            acc = 0.0 + 0.0j
            for i in range(A + 1):
                for j in range(B + 1):
                    c = P[i, j]
                    if c == 0:
                        continue
                    delta = lam + j - kap - i
                    S = _shifted_series_np(lam + j, delta, A, B, nu, t, nmax)
                    acc += c * np.exp(-1j * delta * theta) * S
            out[lam, kap] = norms[lam] * norms[kap] * acc
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _shifted_series_nb(s0, delta, A, B, nu, t, nmax):
        n0 = -delta
        if n0 < 0:
            n0 = 0
        # first term at n = n0: binomials, raw moment and t-power built by loops
        m0 = n0 + delta
        b1 = 1.0
        for k in range(1, A):
            b1 *= (m0 + k) / k
        b2 = 1.0
        for k in range(1, B):
            b2 *= (n0 + k) / k
        s = s0 + n0
        raw = 1.0
        for k in range(1, s + 1):
            raw *= k / (k + nu + 1.0)
        term = b1 * b2 * raw * t ** (2.0 * n0 + delta)
        t2 = t * t
        acc = term
        n = n0
        for _ in range(nmax):
            r = t2
            r *= (n + delta + A) / (n + delta + 1.0)
            r *= (n + B) / (n + 1.0)
            r *= (s0 + n + 1.0) / (s0 + n + nu + 2.0)
            term *= r
            acc += term
            n += 1
            if term < 1e-18 * acc:
                break
        return acc

    @njit(cache=True, parallel=True)
    def _shifted_toeplitz_nb(P, t, theta, nu, dim, norms, nmax):
        A = P.shape[0] - 1
        B = P.shape[1] - 1
        out = np.zeros((dim, dim), dtype=np.complex128)
        for lam in prange(dim):
            for kap in range(dim):
                acc = 0.0 + 0.0j
                for i in range(A + 1):
                    for j in range(B + 1):
                        c = P[i, j]
                        if c == 0:
                            continue
                        delta = lam + j - kap - i
                        S = _shifted_series_nb(lam + j, delta, A, B, nu, t, nmax)
                        phase = np.exp(-1j * delta * theta)
                        acc += c * phase * S
                out[lam, kap] = norms[lam] * norms[kap] * acc
        return out


def shifted_poly_toeplitz(P, z, nu, dim, norms):
    """Entries of the Toeplitz matrix of a Moebius-shifted polynomial symbol.

    ``P`` is the numerator coefficient array over (w^i, conj(w)^j) after the
    symbol has been put over the common denominator
    (1 - conj(z) w)^A (1 - z conj(w))^B with A = P.shape[0]-1, B = P.shape[1]-1
    (both >= 1).  ``norms`` are the monomial norms ||w^k||.
    """
    P = np.ascontiguousarray(P, dtype=np.complex128)
    if P.shape[0] < 2 or P.shape[1] < 2:
        raise ValueError("numerator must be over denominators of exponent >= 1")
    t = abs(z)
    if t >= 1.0:
        raise ValueError("shift point must be interior")
    theta = float(np.angle(z)) if t > 0 else 0.0
    A = P.shape[0] - 1
    B = P.shape[1] - 1
    nmax = _series_terms_needed(t * t, A + B - 2)
    inv_norms = 1.0 / np.asarray(norms, dtype=np.float64)
    if HAVE_NUMBA:
        return _shifted_toeplitz_nb(P, t, theta, float(nu), int(dim), inv_norms, nmax)
    return _shifted_toeplitz_np(P, t, theta, float(nu), int(dim), inv_norms, nmax)
