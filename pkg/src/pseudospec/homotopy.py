"""Eigenvalue continuation along Z(t) = A + M_S(t z), t in [0, 1].

Paths are built by adaptive bisection of [0, 1] with min-max (bottleneck)
matching between consecutive spectra.  The number of distinct eigenvalues
u(t) is computed from the resultant of the characteristic polynomial and its
derivative; drops in u(t) mark bifurcation candidates, which are then
localized by bisection.
"""

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from sklearn.base import BaseEstimator

from .core_linalg import cluster_spectrum, default_cluster_tol, eigenvalues
from .exceptions import DimensionError, DiscontinuityError, PreconditionError
from .polynomials import char_poly, count_distinct_roots
from .pseudospectrum import component_sums
from .structure import PerturbationVector, perturbed
from .validation import check_matrix, check_vector

MIN_STEP = 1e-12
BISECTION_WIDTH = 1e-9
_BRUTE_FORCE_MAX_N = 7
_PERMS = {}


def _perm_table(n):
    if n not in _PERMS:
        _PERMS[n] = np.array(list(permutations(range(n))), dtype=int).reshape(-1, n)
    return _PERMS[n]


def _close(a, b):
    return a <= b * (1 + 1e-12) + 1e-300


def match_step(prev, next):
    """Bijection prev[i] -> next[perm[i]] minimizing the largest displacement.

    Ties are broken by the smallest total displacement, then by the
    lexicographically smallest permutation.
    """
    prev = np.asarray(prev, dtype=complex).ravel()
    nxt = np.asarray(next, dtype=complex).ravel()
    if prev.size != nxt.size:
        raise DimensionError(f"cannot match {prev.size} values to {nxt.size}")
    n = prev.size
    if n == 0:
        return np.zeros(0, dtype=int)
    D = np.abs(prev[:, None] - nxt[None, :])
    if n <= _BRUTE_FORCE_MAX_N:
        P = _perm_table(n)
        costs = D[np.arange(n), P]
        mx = costs.max(axis=1)
        keep = _close(mx, mx.min())
        tot = np.where(keep, costs.sum(axis=1), np.inf)
        keep &= _close(tot, tot.min())
        return P[np.argmax(keep)].copy()
    return _match_large(D)


def _bottleneck_value(D):
    n = D.shape[0]
    vals = np.unique(D)
    lo, hi = 0, vals.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        graph = csr_matrix((D <= vals[mid]).astype(int))
        if np.all(maximum_bipartite_matching(graph, perm_type="column") >= 0) and n:
            hi = mid
        else:
            lo = mid + 1
    return vals[lo]


def _match_large(D):
    n = D.shape[0]
    b = _bottleneck_value(D)
    big = D.sum() + 1.0
    cost = np.where(_close(D, b), D, big)
    _, cols = linear_sum_assignment(cost)
    best = cost[np.arange(n), cols].sum()
    fixed = {}
    for i in range(n):
        for c in range(n):
            if c in fixed.values() or cost[i, c] >= big:
                continue
            trial = cost.copy()
            for r, cc in list(fixed.items()) + [(i, c)]:
                trial[r, :] = big
                trial[:, cc] = big
                trial[r, cc] = cost[r, cc]
            _, tc = linear_sum_assignment(trial)
            if _close(trial[np.arange(n), tc].sum(), best):
                fixed[i] = c
                break
    return np.array([fixed[i] for i in range(n)], dtype=int)


@dataclass
class TrajectoryRecord:
    """Matched eigenvalue paths of Z(t) = A + M_S(t z).

    ``paths[i, j]`` is the i-th path at ``t_samples[j]``.
    """

    t_samples: np.ndarray
    paths: np.ndarray
    step_residuals: np.ndarray
    distinct_counts: np.ndarray
    patterns: list
    bifurcation_candidates: list
    cluster_tol: float
    z: np.ndarray = None

    @property
    def endpoints(self):
        return self.paths[:, -1]


def _spectrum_at(A, S, z, t):
    return eigenvalues(perturbed(A, S, t * z))


def track(A, S, z, initial_steps=16, max_disp=None, eps=None, cluster_tol=None):
    """Follow the eigenvalues of A + M_S(t z) from t = 0 to t = 1.

    A step is bisected until its largest matched displacement is at most
    ``max_disp`` (default ``eps / 10``, or ``max(||z||, 1e-12) / 10`` without
    ``eps``).  A step shorter than 1e-12 that still exceeds ``max_disp``
    raises DiscontinuityError.
    """
    A = check_matrix(A)
    z = z.components if isinstance(z, PerturbationVector) else check_vector(z, S.s)
    if int(initial_steps) < 2:
        raise PreconditionError("initial_steps must be >= 2")
    if max_disp is None:
        scale = eps if eps is not None else max(float(np.linalg.norm(z)), 1e-12)
        max_disp = scale / 10.0
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(A)
    ts = [0.0]
    cur = _spectrum_at(A, S, z, 0.0)
    cols = [cur]
    disps = []
    pending = list(np.linspace(0.0, 1.0, int(initial_steps) + 1)[1:][::-1])
    cache = {}
    while pending:
        t_next = pending[-1]
        t_cur = ts[-1]
        if t_next not in cache:
            cache[t_next] = _spectrum_at(A, S, z, t_next)
        nxt = cache[t_next]
        perm = match_step(cur, nxt)
        matched = nxt[perm]
        disp = float(np.max(np.abs(matched - cur))) if cur.size else 0.0
        if disp <= max_disp:
            pending.pop()
            ts.append(t_next)
            cols.append(matched)
            disps.append(disp)
            cur = matched
            cache.pop(t_next, None)
            continue
        if t_next - t_cur < MIN_STEP:
            raise DiscontinuityError(
                f"displacement {disp:.3g} > {max_disp:.3g} over step of length {t_next - t_cur:.3g} at t={t_cur:.12g}"
            )
        pending.append(0.5 * (t_cur + t_next))
    paths = np.array(cols).T
    counts, patterns = [], []
    for col in cols:
        rep = cluster_spectrum(col, cluster_tol)
        counts.append(len(rep))
        patterns.append(rep.pattern)
    counts = np.array(counts, dtype=int)
    cands = [((ts[j], ts[j + 1]), int(counts[j]), int(counts[j + 1]))
             for j in range(len(ts) - 1) if counts[j] != counts[j + 1]]
    return TrajectoryRecord(np.array(ts), paths, np.array(disps), counts, patterns, cands,
                            float(cluster_tol), z)


def chebyshev_grid(m=257):
    """``m`` Chebyshev-Lobatto points on [0, 1], symmetric about 0.5."""
    m = int(m)
    if m < 2:
        raise PreconditionError("need at least 2 grid points")
    k = np.arange(m)
    t = 0.5 * (1.0 - np.cos(np.pi * k / (m - 1)))
    half = m // 2
    t[m - half:] = 1.0 - t[:half][::-1]
    if m % 2:
        t[half] = 0.5
    t[0], t[-1] = 0.0, 1.0
    return t


@dataclass
class DistinctCountProfile:
    """u(t) from resultants, the clustering count and the minimum eigenvalue gap per t."""

    t: np.ndarray
    u: np.ndarray
    cluster_u: np.ndarray
    min_gap: np.ndarray

    def pairs(self):
        return [(float(t), int(u)) for t, u in zip(self.t, self.u)]

    def candidates(self):
        """Parameter values where u(t) is below its maximum over the grid."""
        return [float(t) for t, u in zip(self.t, self.u) if u < self.u.max()]

    def brackets(self):
        """Intervals between consecutive samples across which u(t) changes."""
        return [(float(self.t[j]), float(self.t[j + 1])) for j in range(len(self.t) - 1)
                if self.u[j] != self.u[j + 1]]

    def disagreements(self, gap=1e-4):
        return [float(t) for t, u, c, g in zip(self.t, self.u, self.cluster_u, self.min_gap)
                if u != c and g >= gap]


def distinct_count(A, S, z, t, rank_tol=None):
    return count_distinct_roots(char_poly(perturbed(A, S, t * z)), rank_tol)


def distinct_count_profile(A, S, z, t_grid=None, rank_tol=None, cluster_tol=None):
    """u(t) = n - nullity(R(p, p')) for p the characteristic polynomial of Z(t)."""
    A = check_matrix(A)
    z = z.components if isinstance(z, PerturbationVector) else check_vector(z, S.s)
    t_grid = chebyshev_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0):
        raise PreconditionError("t_grid must be sorted")
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(A)
    us, cs, gaps = [], [], []
    for t in t_grid:
        Z = perturbed(A, S, t * z)
        ev = eigenvalues(Z)
        us.append(count_distinct_roots(char_poly(Z), rank_tol))
        cs.append(len(cluster_spectrum(ev, cluster_tol)))
        d = np.abs(ev[:, None] - ev[None, :])
        d[np.diag_indices_from(d)] = np.inf
        gaps.append(float(d.min()) if ev.size > 1 else np.inf)
    return DistinctCountProfile(t_grid, np.array(us), np.array(cs), np.array(gaps))


@dataclass
class BifurcationResult:
    found: bool
    t_star: float = None
    half_width: float = None
    u_before: int = None
    u_after: int = None


def refine_bifurcation(A, S, z, bracket, width=BISECTION_WIDTH, rank_tol=None):
    """Localize a change of u(t) inside ``bracket``.

    Bisection finds the edge of the set where u is low.  Numerically that set
    is a short interval around the true bifurcation point, so the opposite
    edge is found too (by a doubling search past the low end, which may step
    outside the bracket) and the midpoint is returned.  When u is equal at
    both ends the bracket is first probed on a 33-point Chebyshev grid; no
    change found means no bifurcation.
    """
    A = check_matrix(A)
    z = z.components if isinstance(z, PerturbationVector) else check_vector(z, S.s)
    lo, hi = (float(b) for b in bracket)
    if not lo < hi:
        raise PreconditionError(f"bad bracket {bracket}")

    def u(t):
        return distinct_count(A, S, z, t, rank_tol)

    u_lo, u_hi = u(lo), u(hi)
    span = hi - lo
    if u_lo == u_hi:
        probe = lo + span * chebyshev_grid(33)
        vals = [u(t) for t in probe]
        k = next((k for k, v in enumerate(vals) if v != u_lo), None)
        if k is None:
            return BifurcationResult(False)
        lo, hi, u_hi = probe[k - 1], probe[k], vals[k]
    u_high = max(u_lo, u_hi)
    a, d = (lo, hi) if u_lo == u_high else (hi, lo)
    edge = _bisect_edge(u, a, d, u_high, width)
    step = abs(d - edge)
    direction = 1.0 if d > edge else -1.0
    inner = d
    while step <= span:
        probe = d + direction * step
        if u(probe) == u_high:
            other = _bisect_edge(u, probe, inner, u_high, width)
            t_star = 0.5 * (edge + other)
            return BifurcationResult(True, t_star, 0.5 * abs(other - edge) + width, int(u_lo), int(u_hi))
        inner = probe
        step *= 2.0
    return BifurcationResult(True, edge, width, int(u_lo), int(u_hi))


def _bisect_edge(u, a, d, u_high, width):
    """Boundary between ``a`` (u == u_high) and ``d`` (u < u_high), to ``width``."""
    while abs(d - a) > width:
        mid = 0.5 * (a + d)
        if u(mid) == u_high:
            a = mid
        else:
            d = mid
    return 0.5 * (a + d)


@dataclass
class ConstancyVerdict:
    intervals: list
    sum_traces: np.ndarray
    unassigned: np.ndarray
    patterns_ok: bool
    sums_ok: bool
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return self.patterns_ok and self.sums_ok


def multiplicity_constancy_check(record, region, cluster_tol=None):
    """Check multiplicity patterns between bifurcations and component sums throughout.

    Between consecutive changes of the distinct count the sorted multiplicity
    pattern must stay the same; the per-component multiplicity sums must stay
    equal to their t = 0 values at every sample.
    """
    tol = record.cluster_tol if cluster_tol is None else cluster_tol
    ts = record.t_samples
    intervals, violations = [], []
    start = 0
    for j in range(1, len(ts) + 1):
        if j == len(ts) or record.distinct_counts[j] != record.distinct_counts[start]:
            pats = sorted(set(record.patterns[start:j]))
            intervals.append({"t_start": float(ts[start]), "t_end": float(ts[j - 1]),
                              "distinct": int(record.distinct_counts[start]),
                              "patterns": [list(p) for p in pats]})
            if len(pats) > 1:
                violations.append(f"pattern changed on [{ts[start]:.6g}, {ts[j - 1]:.6g}] with constant u")
            start = j
    traces, missing = [], []
    for j in range(len(ts)):
        sums, miss = component_sums(record.paths[:, j], region, tol)
        traces.append(sums)
        missing.append(miss)
    traces = np.array(traces, dtype=int).reshape(len(ts), region.component_count)
    missing = np.array(missing, dtype=int)
    sums_ok = bool(np.all(traces == traces[0]) and not missing.any())
    if not sums_ok:
        bad = np.flatnonzero(np.any(traces != traces[0], axis=1) | (missing > 0))
        violations.append(f"component sums changed at t={ts[bad[0]]:.6g}")
    patterns_ok = all(len(iv["patterns"]) == 1 for iv in intervals)
    return ConstancyVerdict(intervals, traces, missing, patterns_ok, sums_ok, violations)


@dataclass
class LocalVerdict:
    passed: bool
    centers: list
    expected: list
    ball_sums: list
    uncovered: int
    failed_ball: int = None


def local_conservation_check(A, A_prime, eta, cluster_tol=None):
    """Eigenvalues of A' must sit in the disjoint balls B(lambda_i, eta) with the multiplicities of A."""
    A = check_matrix(A)
    Ap = check_matrix(A_prime, name="A_prime")
    if Ap.shape != A.shape:
        raise DimensionError(f"A is {A.shape}, A_prime is {Ap.shape}")
    tol = default_cluster_tol(A) if cluster_tol is None else cluster_tol
    rep = cluster_spectrum(eigenvalues(A), tol)
    centers = rep.values
    if len(centers) > 1:
        d = np.abs(centers[:, None] - centers[None, :])
        d[np.diag_indices_from(d)] = np.inf
        gap = float(d.min())
    else:
        gap = np.inf
    if not (0 < eta < gap / 2):
        raise PreconditionError(f"eta={eta:g} must lie in (0, {gap / 2:g})")
    sums = [0] * len(centers)
    uncovered = 0
    for lam in eigenvalues(Ap):
        dist = np.abs(centers - lam)
        k = int(np.argmin(dist))
        if dist[k] < eta:
            sums[k] += 1
        else:
            uncovered += 1
    expected = rep.multiplicities
    failed = next((k for k in range(len(centers)) if sums[k] != expected[k]), None)
    return LocalVerdict(uncovered == 0 and failed is None, [complex(c) for c in centers],
                        expected, sums, uncovered, failed)


class HomotopyTracker(BaseEstimator):
    """Estimator wrapper: ``fit(A)`` stores the matrix, ``transform(zs)`` tracks each z."""

    def __init__(self, structure=None, eps=None, initial_steps=16, max_disp=None, cluster_tol=None):
        self.structure = structure
        self.eps = eps
        self.initial_steps = initial_steps
        self.max_disp = max_disp
        self.cluster_tol = cluster_tol

    def fit(self, A, y=None):
        if self.structure is None:
            raise PreconditionError("a structure is required")
        self.matrix_ = check_matrix(A)
        if self.structure.n != self.matrix_.shape[0]:
            raise DimensionError("structure and matrix sizes differ")
        return self

    def track(self, z):
        if not hasattr(self, "matrix_"):
            from sklearn.exceptions import NotFittedError
            raise NotFittedError("call fit before tracking")
        return track(self.matrix_, self.structure, z, self.initial_steps, self.max_disp,
                     self.eps, self.cluster_tol)

    def transform(self, zs):
        return [self.track(z) for z in zs]
