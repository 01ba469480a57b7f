"""Multiplicity bounds read off unstructured pseudospectra.

``mu_eps`` is the largest total eigenvalue multiplicity that one connected
component of the eps-pseudospectrum holds.  Since components only merge as eps
grows, the last eps with ``mu_eps <= k`` lower-bounds how far A is from any
matrix having an eigenvalue of multiplicity k+1.  ``witness_higher_multiplicity``
looks for such a matrix to bound the same distance from above.
"""

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from .core_linalg import cluster_spectrum, default_cluster_tol, eigenvalues, spectral_norm, spectrum
from .exceptions import CoverageError, PreconditionError
from .pseudospectrum import _auto_box, _touches_edge, component_sums, region_from_sigma, sigma_min_grid
from .structure import perturbed, sample_ball
from .validation import check_matrix, check_positive

BISECTION_REL_WIDTH = 1e-3
_BOX_TRIES = 6


@dataclass
class MultiplicityProfile:
    mu_eps: int
    per_component: list
    m_of_A: int


def _max_multiplicity(A, cluster_tol):
    return max(m for _, m in spectrum(A, cluster_tol).distinct)


def mu_eps(A, eps, region, cluster_tol=None):
    """Largest eigenvalue-multiplicity sum over the components of ``region``.

    ``region`` should be the pseudospectrum of ``A`` at ``eps`` (unstructured
    for the distance bounds; a structured region works the same way).
    An eigenvalue of ``A`` that lies in no component raises CoverageError.
    """
    A = check_matrix(A)
    check_positive(eps, "eps")
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(A)
    sums, unassigned = component_sums(eigenvalues(A), region, cluster_tol)
    if unassigned:
        raise CoverageError(f"{unassigned} eigenvalue(s) of A fall outside every component")
    per = [(c + 1, int(v)) for c, v in enumerate(sums)]
    return MultiplicityProfile(
        mu_eps=max(v for _, v in per),
        per_component=per,
        m_of_A=_max_multiplicity(A, cluster_tol),
    )


@dataclass
class SimpleGuarantee:
    verdict: bool
    samples: int
    simple_count: int
    contradictions: list = field(default_factory=list)

    @property
    def consistent(self):
        return not (self.verdict and self.contradictions)


def simple_eigenvalue_guarantee(A, S, eps, region, samples=200, seed=0, cluster_tol=None):
    """Check the n-components criterion for simple spectra.

    When the structured region has n components, every ``A + M_S(z)`` with
    ``||z|| < eps`` has n distinct eigenvalues.  The verdict is that component
    count test; the empirical arm samples the strict ball and counts the
    perturbed matrices whose clustered spectrum has n distinct values.  A
    sample that contradicts a true verdict points at the grid or at the
    clustering tolerance, and is reported with a warning.
    """
    A = check_matrix(A)
    eps = check_positive(eps, "eps")
    n = A.shape[0]
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(A)
    verdict = region.component_count == n
    simple = 0
    bad = []
    for k, z in enumerate(sample_ball(S.s, eps, strict=True, count=samples, seed=seed)):
        if len(spectrum(perturbed(A, S, z), cluster_tol)) == n:
            simple += 1
        else:
            bad.append(k)
    if verdict and bad:
        warnings.warn(
            f"{len(bad)} sampled perturbation(s) have a repeated eigenvalue although the region has "
            f"{n} components; the grid probably split a component or cluster_tol is too large",
            RuntimeWarning,
        )
    return SimpleGuarantee(verdict, samples, simple, bad)


@dataclass
class DistanceBound:
    """Result of the bisection on eps for ``mu_eps <= k``.

    ``eps_star`` is the largest tested eps with ``mu_eps <= k`` and
    ``bracket`` the final (good, bad) interval.  With ``open_above`` set even
    ``eps_hi`` kept ``mu_eps <= k``, so eps_star is only a lower estimate.
    ``slack`` (two cell diagonals plus the bracket width) is the grid
    tolerance to allow when comparing eps_star against true distances.
    """

    eps_star: float
    bracket: tuple
    open_above: bool
    k: int
    m_of_A: int
    box: tuple
    resolution: tuple
    slack: float
    truncated: bool
    evaluations: list


def _spread(ev):
    return float(np.abs(ev[:, None] - ev[None, :]).max()) if ev.size > 1 else 0.0


def distance_lower_bound(A, k, eps_lo=None, eps_hi=None, resolution=601, cluster_tol=None):
    """Bisect on eps for the last value where every component holds at most k eigenvalues.

    One box and one ``sigma_min`` grid (sized for ``eps_hi``) serve every
    eps, so ``mu_eps`` is exactly monotone along the bisection.  Defaults:
    ``eps_hi = 0.55 * spread`` (1 when all eigenvalues coincide) and
    ``eps_lo = 1e-3 * eps_hi``.  Bisection stops at width ``1e-3 * eps_hi``.
    """
    A = check_matrix(A)
    n = A.shape[0]
    k = int(k)
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(A)
    ev = eigenvalues(A)
    m_A = _max_multiplicity(A, cluster_tol)
    if not m_A <= k <= n:
        raise PreconditionError(f"k={k} must satisfy m(A)={m_A} <= k <= n={n}")
    spread = _spread(ev)
    if eps_hi is None:
        eps_hi = 0.55 * spread if spread > 0 else 1.0
    eps_hi = check_positive(eps_hi, "eps_hi")
    eps_lo = check_positive(1e-3 * eps_hi if eps_lo is None else eps_lo, "eps_lo")
    if eps_lo >= eps_hi:
        raise PreconditionError(f"eps_lo={eps_lo:g} must be below eps_hi={eps_hi:g}")

    box, half = _auto_box(ev, eps_hi)
    for _ in range(_BOX_TRIES):
        sig = sigma_min_grid(A, box, resolution)
        truncated = _touches_edge(sig <= eps_hi)
        if not truncated:
            break
        box, half = _auto_box(ev, eps_hi, 1.5 * half)

    evaluations = []

    def mu(eps):
        region = region_from_sigma(sig, box, eps, ev)
        value = mu_eps(A, eps, region, cluster_tol).mu_eps
        evaluations.append((float(eps), int(value)))
        return value, region

    lo_mu, region = mu(eps_lo)
    if lo_mu > k:
        raise PreconditionError(f"mu_eps at eps_lo={eps_lo:g} is {lo_mu} > k={k}; lower eps_lo")
    slack = 2.0 * region.cell_diagonal
    hi_mu, _ = mu(eps_hi)
    if hi_mu <= k:
        return DistanceBound(eps_hi, (eps_hi, np.inf), True, k, m_A, box, sig.shape,
                             slack, truncated, evaluations)
    lo, hi = eps_lo, eps_hi
    while hi - lo > BISECTION_REL_WIDTH * eps_hi:
        mid = 0.5 * (lo + hi)
        if mu(mid)[0] <= k:
            lo = mid
        else:
            hi = mid
    return DistanceBound(lo, (lo, hi), False, k, m_A, box, sig.shape,
                         slack + (hi - lo), truncated, evaluations)


def minimal_enclosing_circle(points):
    """Center and radius of the smallest disc containing the complex ``points``.

    Brute force over the circles through two or three points; fine for the
    handful of eigenvalues a witness collapses.
    """
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size == 1:
        return complex(pts[0]), 0.0
    best_c, best_r = None, np.inf

    def consider(c):
        nonlocal best_c, best_r
        r = float(np.abs(pts - c).max())
        if r < best_r:
            best_c, best_r = c, r

    for a, b in itertools.combinations(pts, 2):
        consider(0.5 * (a + b))
    for a, b, c in itertools.combinations(pts, 3):
        # circumcenter of a triangle in the complex plane
        ba, ca = b - a, c - a
        den = 2.0 * (ba.real * ca.imag - ba.imag * ca.real)
        if abs(den) < 1e-300:
            continue
        ux = (ca.imag * abs(ba) ** 2 - ba.imag * abs(ca) ** 2) / den
        uy = (ba.real * abs(ca) ** 2 - ca.real * abs(ba) ** 2) / den
        consider(a + complex(ux, uy))
    return complex(best_c), best_r


@dataclass
class Witness:
    distance: float
    X: np.ndarray
    collapsed: list
    center: complex
    multiplicity: int


def _candidate_subsets(ev, size, budget, rng):
    n = ev.size
    total = 1
    for j in range(size):
        total = total * (n - j) // (j + 1)
    if total <= budget:
        return [tuple(c) for c in itertools.combinations(range(n), size)]
    D = np.abs(ev[:, None] - ev[None, :])
    subsets = {tuple(sorted(np.argsort(D[i], kind="stable")[:size])) for i in range(n)}
    while len(subsets) < budget:
        subsets.add(tuple(sorted(rng.choice(n, size=size, replace=False))))
    return sorted(subsets)


def witness_higher_multiplicity(A, k, budget=256, seed=0, cluster_tol=None):
    """Search for a nearby X with an eigenvalue of multiplicity at least k+1.

    Works in the complex Schur form ``A = Q T Q*``: replacing k+1 diagonal
    entries of T by the center of their smallest enclosing disc gives X with
    that center as a (k+1)-fold eigenvalue and ``||X - A||`` equal to the disc
    radius.  All subsets are tried when there are at most ``budget``;
    otherwise each eigenvalue with its k nearest neighbours plus random
    subsets drawn from ``seed``.  Returns the closest Witness, or None.

    The result only bounds the true minimal distance from above.
    """
    A = check_matrix(A)
    n = A.shape[0]
    k = int(k)
    if not 1 <= k < n:
        raise PreconditionError(f"k={k} must satisfy 1 <= k < n={n}")
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(A)
    m_A = _max_multiplicity(A, cluster_tol)
    if m_A >= k + 1:
        return Witness(0.0, A.copy(), [], complex(np.nan), m_A)

    T, Q = schur(A, output="complex")
    diag = np.diag(T).copy()
    rng = np.random.default_rng(seed)
    best = None
    for subset in _candidate_subsets(diag, k + 1, int(budget), rng):
        c, r = minimal_enclosing_circle(diag[list(subset)])
        if best is None or r < best[1]:
            best = (c, r, subset)
    if best is None:
        return None
    c, _, subset = best
    T2 = T.copy()
    T2[list(subset), list(subset)] = c
    X = Q @ T2 @ Q.conj().T
    # X = A + Q (T2 - T) Q*, and T2 - T is diagonal, so this is the disc radius
    dist = spectral_norm(X - A)
    # multiplicity by construction: the Schur diagonal of X holds c exactly k+1 times
    mult = max(m for _, m in cluster_spectrum(np.diag(T2), cluster_tol).distinct)
    return Witness(float(dist), X, [int(i) for i in subset], complex(c), int(mult))
