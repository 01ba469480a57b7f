"""Dense complex linear algebra primitives.

The eigensolver is a self-contained Hessenberg reduction followed by
single-shift complex QR iteration with deflation.  Singular values come from
LAPACK through numpy.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError
from .validation import check_matrix

_ULP = np.finfo(float).eps


def hessenberg(A):
    """Reduce ``A`` to upper Hessenberg form by Householder reflections.

    Returns only the Hessenberg matrix; the orthogonal factor is not
    accumulated.
    """
    H = check_matrix(A).copy()
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        H[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _eig2(a, b, c, d):
    m = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    lam1 = m + disc if abs(m + disc) >= abs(m - disc) else m - disc
    det = a * d - b * c
    lam2 = det / lam1 if lam1 != 0 else m - (lam1 - m)
    return lam1, lam2


def eigenvalues(A, max_sweeps=None):
    """Eigenvalues of a square complex matrix, with repetition.

    Values are returned in the order of the diagonal of the converged Schur
    form.  Raises ConvergenceError after ``max_sweeps`` QR sweeps (default
    ``100 * n``) with the already-deflated eigenvalues attached.
    """
    H = hessenberg(A)
    n = H.shape[0]
    if max_sweeps is None:
        max_sweeps = 100 * n
    scale = np.abs(H).max()
    found = np.empty(n, dtype=complex)
    done = np.zeros(n, dtype=bool)
    hi = n - 1
    sweeps = 0
    stalled = 0
    while hi >= 0:
        if hi == 0:
            found[0] = H[0, 0]
            done[0] = True
            break
        lo = 0
        for k in range(hi, 0, -1):
            ref = abs(H[k, k]) + abs(H[k - 1, k - 1])
            if ref == 0.0:
                ref = scale
            if abs(H[k, k - 1]) <= _ULP * ref:
                H[k, k - 1] = 0.0
                lo = k
                break
        if lo == hi:
            found[hi] = H[hi, hi]
            done[hi] = True
            hi -= 1
            stalled = 0
            continue
        if lo == hi - 1:
            found[hi - 1], found[hi] = _eig2(H[lo, lo], H[lo, hi], H[hi, lo], H[hi, hi])
            done[lo:hi + 1] = True
            hi -= 2
            stalled = 0
            continue
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"QR iteration did not converge after {sweeps} sweeps", partial=found[done]
            )
        stalled += 1
        if stalled % 11 == 0:
            # exceptional shift breaks cycling
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            l1, l2 = _eig2(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
            mu = l1 if abs(l1 - H[hi, hi]) <= abs(l2 - H[hi, hi]) else l2
        _qr_sweep(H, lo, hi, mu)
        sweeps += 1
    return found


def _qr_sweep(H, lo, hi, mu):
    """One shifted QR step on the active block H[lo:hi+1, lo:hi+1], in place."""
    idx = np.arange(lo, hi + 1)
    H[idx, idx] -= mu
    rots = []
    for k in range(lo, hi):
        x, y = H[k, k], H[k + 1, k]
        r = np.hypot(abs(x), abs(y))
        if r == 0.0:
            G = np.eye(2, dtype=complex)
        else:
            c, s = x / r, y / r
            G = np.array([[c.conjugate(), s.conjugate()], [-s, c]])
        H[k:k + 2, k:hi + 1] = G @ H[k:k + 2, k:hi + 1]
        H[k + 1, k] = 0.0
        rots.append(G)
    for k, G in zip(range(lo, hi), rots):
        H[lo:k + 2, k:k + 2] = H[lo:k + 2, k:k + 2] @ G.conj().T
    H[idx, idx] += mu


def eigenvalues_batch(stack):
    """Eigenvalues of a stack of square matrices, shape (..., n, n) -> (..., n).

    Uses LAPACK (numpy) for throughput in sampling sweeps; ``eigenvalues`` is
    the reference solver.
    """
    return np.linalg.eigvals(np.asarray(stack, dtype=complex))


def singular_values(M):
    """Singular values in descending order."""
    return np.linalg.svd(check_matrix(M, square=False), compute_uv=False)


def spectral_norm(M):
    return float(singular_values(M)[0])


def sigma_min(M):
    return float(singular_values(M)[-1])


def auto_rank_tol(M, factor=1e-12):
    M = np.asarray(M)
    sv = np.linalg.svd(M, compute_uv=False)
    return max(M.shape) * (sv[0] if sv.size else 0.0) * factor


def nullity(M, tol=None):
    """Number of columns minus numerical rank.

    The rank counts singular values above ``tol``; when ``tol`` is None the
    threshold is ``max(m, n) * sigma_max * 1e-12``.
    """
    M = check_matrix(M, square=False, name="M")
    sv = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        tol = max(M.shape) * sv[0] * 1e-12
    return int(M.shape[1] - np.count_nonzero(sv > tol))


def rank(M, tol=None):
    M = check_matrix(M, square=False, name="M")
    return M.shape[1] - nullity(M, tol)


def default_cluster_tol(A):
    return 1e-7 * (1.0 + spectral_norm(A))


@dataclass
class SpectrumReport:
    """Clustered spectrum: distinct (value, multiplicity) pairs plus raw values."""

    distinct: list
    raw: np.ndarray
    cluster_tol: float
    labels: np.ndarray = field(repr=False, default=None)

    @property
    def values(self):
        return np.array([v for v, _ in self.distinct], dtype=complex)

    @property
    def multiplicities(self):
        return [m for _, m in self.distinct]

    @property
    def pattern(self):
        """Sorted multiplicity pattern, e.g. (2, 1, 1)."""
        return tuple(sorted(self.multiplicities, reverse=True))

    def __len__(self):
        return len(self.distinct)


def cluster_spectrum(raw, tol):
    """Single-linkage clustering of eigenvalues at threshold ``tol``.

    Clusters whose centroids end up within ``2 * tol`` of each other are
    merged as well, so reported values are always more than ``2 * tol`` apart.
    """
    if tol < 0:
        raise ValueError(f"cluster tolerance must be nonnegative, got {tol}")
    raw = np.asarray(raw, dtype=complex).ravel()
    n = raw.size
    if n == 0:
        return SpectrumReport([], raw, float(tol), np.zeros(0, dtype=int))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    dist = np.abs(raw[:, None] - raw[None, :])
    for i, j in zip(*np.nonzero(np.triu(dist <= tol, 1))):
        union(i, j)
    while True:
        roots = sorted({find(i) for i in range(n)})
        members = {r: [i for i in range(n) if find(i) == r] for r in roots}
        cents = {r: raw[members[r]].mean() for r in roots}
        merged = False
        for a in range(len(roots)):
            for b in range(a + 1, len(roots)):
                if abs(cents[roots[a]] - cents[roots[b]]) <= 2 * tol:
                    union(roots[a], roots[b])
                    merged = True
        if not merged:
            break
    order = sorted(roots, key=lambda r: (round(cents[r].real, 12), round(cents[r].imag, 12)))
    labels = np.empty(n, dtype=int)
    distinct = []
    for lab, r in enumerate(order):
        labels[members[r]] = lab
        distinct.append((complex(cents[r]), len(members[r])))
    return SpectrumReport(distinct, raw, float(tol), labels)


def spectrum(A, cluster_tol=None):
    """Clustered spectrum of ``A`` using the reference eigensolver."""
    A = check_matrix(A)
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(A)
    return cluster_spectrum(eigenvalues(A), cluster_tol)
