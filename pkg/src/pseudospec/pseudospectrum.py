"""Grid estimates of (structured) pseudospectra and per-component eigenvalue accounting.

Unstructured mode thresholds ``sigma_min(lambda I - A)`` at cell centers.
Structured mode builds an inner approximation: a cell is marked only when it
holds an actual eigenvalue of some ``A + M_S(z)`` with ``||z|| < eps`` (from
sampling the ball) or when its center has a structured-distance witness
below ``eps`` (refinement).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator

from ._parallel import map_ordered
from .core_linalg import (
    cluster_spectrum,
    default_cluster_tol,
    eigenvalues,
    eigenvalues_batch,
    spectral_norm,
)
from .exceptions import BoxError, PreconditionError
from .structure import PerturbationVector, StructurePattern, perturbed, perturbed_batch, sample_ball
from .validation import check_box, check_matrix, check_positive, check_resolution, check_vector

OUTSIDE_UNKNOWN = 0
CERTIFIED_OUTSIDE = 1
SAMPLED_INSIDE = 2
CERTIFIED_INSIDE = 3
PROVENANCE_NAMES = {
    OUTSIDE_UNKNOWN: "outside_unknown",
    CERTIFIED_OUTSIDE: "certified_outside",
    SAMPLED_INSIDE: "sampled_inside",
    CERTIFIED_INSIDE: "certified_inside",
}

_CHUNK = 16384
_ASCENT_STEPS = 40
_ASCENT_TOL = 1e-6
_AUTO_BOX_GROWTH = 1.5
_AUTO_BOX_TRIES = 10


@dataclass
class GridRegion:
    """Rasterized pseudospectrum over a rectangular box.

    Arrays are indexed ``[i_re, i_im]``.  Cell ``(i, j)`` is the half-open
    rectangle ``[re_min + i*dx, re_min + (i+1)*dx) x [im_min + j*dy, ...)``.
    """

    box: tuple
    resolution: tuple
    inside: np.ndarray
    epsilon: float
    mode: str
    provenance: np.ndarray
    labels: np.ndarray = None
    component_count: int = 0
    truncated: bool = False
    structure: StructurePattern = None
    stats: dict = field(default_factory=dict)

    @property
    def dx(self):
        return (self.box[1] - self.box[0]) / self.resolution[0]

    @property
    def dy(self):
        return (self.box[3] - self.box[2]) / self.resolution[1]

    @property
    def cell_diagonal(self):
        return float(np.hypot(self.dx, self.dy))

    @property
    def cell_area(self):
        return self.dx * self.dy

    @property
    def area(self):
        return float(np.count_nonzero(self.inside) * self.cell_area)

    def centers(self):
        re = self.box[0] + (np.arange(self.resolution[0]) + 0.5) * self.dx
        im = self.box[2] + (np.arange(self.resolution[1]) + 0.5) * self.dy
        return re[:, None] + 1j * im[None, :]

    def cell_of(self, lam):
        """Index of the cell containing ``lam``, or None outside the box."""
        i = int(np.floor((lam.real - self.box[0]) / self.dx))
        j = int(np.floor((lam.imag - self.box[2]) / self.dy))
        if 0 <= i < self.resolution[0] and 0 <= j < self.resolution[1]:
            return i, j
        return None


@dataclass
class StructuredDistance:
    """Upper bound on the structured distance from A to matrices having ``lam`` as eigenvalue."""

    distance: float
    witness: PerturbationVector
    feasible: bool
    residual: float


@dataclass
class ComponentReport:
    component_id: int
    baseline_sum: int
    per_z_sums: list
    conserved: bool
    nonempty_for_all_z: bool


@dataclass
class ConservationReport:
    components: list
    coverage_violations: list
    baseline_unassigned: int

    @property
    def all_conserved(self):
        return all(c.conserved for c in self.components)

    @property
    def all_nonempty(self):
        return all(c.nonempty_for_all_z for c in self.components)

    @property
    def ok(self):
        return self.all_conserved and self.all_nonempty and not self.coverage_violations


def unstructured_membership(A, lam, eps):
    """True when ``sigma_min(lam I - A) <= eps``."""
    A = check_matrix(A)
    eps = check_positive(eps, "eps")
    n = A.shape[0]
    return bool(np.linalg.svd(lam * np.eye(n) - A, compute_uv=False)[-1] <= eps)


def _sigma_min_points(A, points):
    points = np.asarray(points, dtype=complex).ravel()
    n = A.shape[0]
    eye = np.eye(n)

    def chunk(sl):
        M = points[sl, None, None] * eye - A
        return np.linalg.svd(M, compute_uv=False)[:, -1]

    slices = [slice(k, k + _CHUNK) for k in range(0, points.size, _CHUNK)]
    parts = map_ordered(chunk, slices)
    return np.concatenate(parts) if parts else np.zeros(0)


def sigma_min_grid(A, box, resolution):
    """``sigma_min(lambda I - A)`` at every cell center, shape ``resolution``."""
    A = check_matrix(A)
    box = check_box(box)
    res = check_resolution(resolution)
    probe = GridRegion(box, res, None, 0.0, "unstructured", None)
    C = probe.centers()
    return _sigma_min_points(A, C).reshape(C.shape)


def _compressed_resolvent(A, S, points):
    """H[k, l] = G[j_k, i_l] with G = (lam I - A)^-1, batched over points."""
    n = A.shape[0]
    M = points[:, None, None] * np.eye(n) - A
    G = np.linalg.inv(M)
    return G[:, S.cols[:, None], S.rows[None, :]]


def _dominant_ascent(H, W, steps=_ASCENT_STEPS, target=None):
    """Maximize the spectral radius of diag(w) H over unit w, batched.

    Returns the best radius seen, the direction achieving it and the dominant
    eigenvalue there.  The update ``w <- grad / ||grad||`` is the fixed-point
    iteration for a degree-one homogeneous objective on the sphere.  Rows stop
    once they converge or, with ``target`` given, once their radius reaches it.
    """
    m, s = W.shape
    w = W / np.linalg.norm(W, axis=1, keepdims=True)
    best_rho = np.full(m, -1.0)
    best_w = w.copy()
    best_mu = np.zeros(m, dtype=complex)
    active = np.arange(m)
    for _ in range(steps):
        Ha, wa = H[active], w[active]
        rows = np.arange(active.size)
        K = wa[:, :, None] * Ha
        vals, vecs = np.linalg.eig(K)
        idx = np.argmax(np.abs(vals), axis=1)
        mu = vals[rows, idx]
        rho = np.abs(mu)
        better = rho > best_rho[active]
        best_rho[active[better]] = rho[better]
        best_w[active[better]] = wa[better]
        best_mu[active[better]] = mu[better]
        x = vecs[rows, :, idx]
        lvals, lvecs = np.linalg.eig(np.conj(np.swapaxes(K, 1, 2)))
        jdx = np.argmin(np.abs(lvals - np.conj(mu)[:, None]), axis=1)
        y = lvecs[rows, :, jdx]
        Hx = np.einsum("mkl,ml->mk", Ha, x)
        denom = np.einsum("mk,mk->m", np.conj(y), x)
        ok = (np.abs(denom) > 1e-14) & (rho > 0)
        g = np.zeros_like(wa)
        g[ok] = np.conj(y[ok]) * Hx[ok] / denom[ok, None]
        phase = np.where(rho > 0, mu / np.where(rho > 0, rho, 1.0), 1.0)
        G = phase[:, None] * np.conj(g)
        norm = np.linalg.norm(G, axis=1)
        step = ok & (norm > 0)
        w_new = wa.copy()
        w_new[step] = G[step] / norm[step, None]
        moved = np.abs(w_new - wa).max(axis=1) > _ASCENT_TOL
        keep = step & moved
        if target is not None:
            keep &= best_rho[active] < target
        w[active] = w_new
        active = active[keep]
        if not active.size:
            break
    return best_rho, best_w, best_mu


def _random_directions(s, count, rng):
    # one (re, im) draw per entry, row by row, so fewer restarts give a prefix of more
    g = rng.standard_normal((count, s, 2)) @ np.array([1.0, 1j])
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _residual(A, S, lam, z):
    M = lam * np.eye(A.shape[0]) - perturbed(A, S, z)
    return float(np.linalg.svd(M, compute_uv=False)[-1])


def structured_distance_upper(A, S, lam, restarts=8, seed=0):
    """Smallest ``||z||`` found such that ``lam`` is an eigenvalue of ``A + M_S(z)``.

    The search maximizes the spectral radius ``rho(diag(w) H)`` of the
    compressed resolvent ``H`` over unit directions ``w``, starting from the
    coordinate directions plus ``restarts`` random ones; ``z = w / mu`` for the
    dominant eigenvalue ``mu``.  The result is the best witness whose residual
    ``sigma_min(lam I - A - M_S(z))`` is at most ``1e-8 (1 + ||A||)``.
    """
    A = check_matrix(A)
    lam = complex(lam)
    if not np.isfinite(lam):
        raise PreconditionError("lambda must be finite")
    n = A.shape[0]
    normA = spectral_norm(A)
    tol = 1e-8 * (1.0 + normA)
    base = float(np.linalg.svd(lam * np.eye(n) - A, compute_uv=False)[-1])
    if base <= 1e-14 * (1.0 + normA):
        return StructuredDistance(0.0, PerturbationVector(np.zeros(S.s)), True, base)
    H = _compressed_resolvent(A, S, np.array([lam]))[0]
    rng = np.random.default_rng(seed)
    starts = np.vstack([np.eye(S.s, dtype=complex), _random_directions(S.s, int(restarts), rng)])
    if S.s == 1:
        rho = np.abs(H[:, 0])
        mu = H[:, 0]
        W = np.ones((1, 1), dtype=complex)
    else:
        rho, W, mu = _dominant_ascent(np.broadcast_to(H, (len(starts), S.s, S.s)).copy(), starts)
    best = StructuredDistance(np.inf, None, False, np.inf)
    # rank by the witness norm itself so that adding restarts can only help
    norms = np.where(rho > 0, np.linalg.norm(W, axis=1) / np.where(rho > 0, rho, 1.0), np.inf)
    for k in np.argsort(norms, kind="stable"):
        if not np.isfinite(norms[k]):
            break
        z = W[k] / mu[k]
        res = _residual(A, S, lam, z)
        if res <= tol:
            return StructuredDistance(float(np.linalg.norm(z)), PerturbationVector(z), True, res)
        if res < best.residual:
            best = StructuredDistance(float(np.linalg.norm(z)), PerturbationVector(z), False, res)
    return best


def _structured_upper_bounds(A, S, points, eps, seed):
    """Vectorized upper bounds on the structured distance at each point.

    Coordinate directions give ``1 / |H_kk|``; points whose lower bound
    ``1 / ||H||_2`` is already >= eps are skipped by the ascent.
    """
    m = points.size
    ub = np.full(m, np.inf)
    lb = np.zeros(m)

    def chunk(sl):
        H = _compressed_resolvent(A, S, points[sl])
        diag = np.abs(np.diagonal(H, axis1=1, axis2=2))
        with np.errstate(divide="ignore"):
            u = 1.0 / diag.max(axis=1)
            lo = 1.0 / np.linalg.svd(H, compute_uv=False)[:, 0]
        return u, lo

    slices = [slice(k, k + _CHUNK) for k in range(0, m, _CHUNK)]
    for sl, (u, lo) in zip(slices, map_ordered(chunk, slices)):
        ub[sl] = u
        lb[sl] = lo
    if S.s > 1:
        todo = np.flatnonzero((ub >= eps) & (lb < eps))
        if todo.size:
            rng = np.random.default_rng(seed)
            starts = np.vstack([np.eye(S.s, dtype=complex), _random_directions(S.s, 2, rng)])
            # rho >= 1/eps already certifies the point, no need to keep climbing
            target = 1.0 / (eps * (1.0 - 1e-12))

            def ascend(idx):
                H = _compressed_resolvent(A, S, points[idx])
                # the best coordinate direction first; other starts only where it fails
                first = np.zeros((idx.size, S.s), dtype=complex)
                first[np.arange(idx.size), np.abs(np.diagonal(H, axis1=1, axis2=2)).argmax(axis=1)] = 1
                rho = _dominant_ascent(H, first, target=target)[0]
                left = np.flatnonzero(rho < target)
                if left.size:
                    Hs = np.repeat(H[left], len(starts), axis=0)
                    Ws = np.tile(starts, (left.size, 1))
                    more = _dominant_ascent(Hs, Ws, target=target)[0]
                    rho[left] = np.maximum(rho[left], more.reshape(left.size, len(starts)).max(axis=1))
                return rho

            blocks = [todo[k:k + _CHUNK // 16] for k in range(0, todo.size, _CHUNK // 16)]
            for idx, rho in zip(blocks, map_ordered(ascend, blocks)):
                with np.errstate(divide="ignore"):
                    ub[idx] = np.minimum(ub[idx], 1.0 / rho)
    return ub


def _auto_box(ev, eps, half=None):
    center = ev.mean()
    spread = float(np.abs(ev[:, None] - ev[None, :]).max()) if ev.size > 1 else 0.0
    if half is None:
        # spread/2 alone misses eigenvalues when the mean is off-center
        half = max(spread / 2, float(np.abs(ev - center).max())) + 2 * eps
    return (center.real - half, center.real + half, center.imag - half, center.imag + half), half


def _check_box_margin(box, ev, eps):
    for lam in ev:
        margin = min(lam.real - box[0], box[1] - lam.real, lam.imag - box[2], box[3] - lam.imag)
        if margin < eps:
            raise BoxError(
                f"eigenvalue {lam:.6g} lies outside the box or within eps={eps:g} of its edge"
            )


def _mark(prov, region, points, code):
    """Set provenance ``code`` on cells containing ``points``; returns count outside the box."""
    out = 0
    for lam in points:
        c = region.cell_of(lam)
        if c is None:
            out += 1
        elif prov[c] < code:
            prov[c] = code
    return out


def _compute_region(A, S, eps, box, res, ev, samples, seed, refine, strict):
    if S is None:
        return region_from_sigma(sigma_min_grid(A, box, res), box, eps, ev)
    n = A.shape[0]
    normA = spectral_norm(A)
    prov = np.zeros(res, dtype=np.uint8)
    region = GridRegion(box, res, None, eps, "structured", prov, structure=S)
    _mark(prov, region, ev, CERTIFIED_INSIDE)

    zs = sample_ball(S.s, eps, strict=strict, count=samples, seed=seed)
    mats = perturbed_batch(A, S, np.array([z.components for z in zs]))
    evs = eigenvalues_batch(mats)
    resid = np.linalg.svd(evs[:, :, None, None] * np.eye(n) - mats[:, None], compute_uv=False)[..., -1]
    good = resid <= 1e-8 * (1.0 + normA)
    stats = {"sampled_eigenvalues": int(good.sum()), "rejected_eigenvalues": int((~good).sum())}
    outside = _mark(prov, region, evs[good], SAMPLED_INSIDE)

    if refine:
        pts = region.centers().ravel()
        zero = _sigma_min_points(A, pts) <= 1e-14 * (1.0 + normA)
        ub = np.zeros(pts.size)
        rest = np.flatnonzero(~zero)
        ub[rest] = _structured_upper_bounds(A, S, pts[rest], eps, seed)
        hit = (ub < eps).reshape(res)
        prov[hit] = CERTIFIED_INSIDE
        stats["refined_cells"] = int(hit.sum())

    region.inside = prov >= SAMPLED_INSIDE
    region.stats = stats
    region.truncated = bool(outside > 0 or _touches_edge(region.inside))
    return connected_components(region)


def _touches_edge(inside):
    return bool(inside[0, :].any() or inside[-1, :].any() or inside[:, 0].any() or inside[:, -1].any())


def region_from_sigma(sig, box, eps, ev):
    """Unstructured region from precomputed ``sigma_min`` at cell centers.

    Cells containing an eigenvalue in ``ev`` are inside regardless of the
    threshold.  Thresholding one fixed grid at several eps gives nested masks.
    """
    res = sig.shape
    prov = np.where(sig <= eps, CERTIFIED_INSIDE, CERTIFIED_OUTSIDE).astype(np.uint8)
    region = GridRegion(tuple(float(b) for b in box), res, None, float(eps), "unstructured", prov)
    _mark(prov, region, ev, CERTIFIED_INSIDE)
    region.inside = prov == CERTIFIED_INSIDE
    region.truncated = _touches_edge(region.inside)
    return connected_components(region)


def grid_pseudospectrum(A, S=None, eps=None, box=None, resolution=201, samples=2000, seed=0,
                        refine=True, strict=True):
    """Rasterize the (structured) eps-pseudospectrum of ``A``.

    With ``S=None`` the unstructured pseudospectrum is computed from
    ``sigma_min`` at cell centers.  With a StructurePattern the result is an
    inner approximation of the strict structured pseudospectrum.  When ``box``
    is None an automatic box centered at the mean eigenvalue is used and grown
    until no inside cell touches its edge; an explicit box must contain every
    eigenvalue with a margin of at least ``eps`` (BoxError otherwise).

    Cells holding an eigenvalue of ``A`` are always inside.
    """
    A = check_matrix(A)
    eps = check_positive(eps, "eps")
    res = check_resolution(resolution)
    if S is not None and S.n != A.shape[0]:
        raise PreconditionError(f"structure is for n={S.n}, matrix is {A.shape[0]}x{A.shape[0]}")
    ev = eigenvalues(A)
    if box is not None:
        box = check_box(box)
        _check_box_margin(box, ev, eps)
        return _compute_region(A, S, eps, box, res, ev, samples, seed, refine, strict)
    b, half = _auto_box(ev, eps)
    tries = 0
    if S is not None and refine:
        # size the box on the cheap sampled set first; refinement rarely reaches further
        while tries < _AUTO_BOX_TRIES - 1:
            if not _compute_region(A, S, eps, b, res, ev, samples, seed, False, strict).truncated:
                break
            b, half = _auto_box(ev, eps, half * _AUTO_BOX_GROWTH)
            tries += 1
    while True:
        region = _compute_region(A, S, eps, b, res, ev, samples, seed, refine, strict)
        tries += 1
        if not region.truncated or tries >= _AUTO_BOX_TRIES:
            return region
        b, half = _auto_box(ev, eps, half * _AUTO_BOX_GROWTH)


def connected_components(region):
    """Label the inside cells by 8-connectivity.

    Labels run 1..c in order of first appearance in a row-major scan of the
    ``[i_re, i_im]`` array.
    """
    raw, count = ndimage.label(region.inside, structure=np.ones((3, 3), dtype=int))
    labels = np.zeros_like(raw)
    if count:
        flat = raw.ravel()
        ids, first = np.unique(flat[flat > 0], return_index=True)
        nz = np.flatnonzero(flat > 0)
        order = ids[np.argsort(nz[first], kind="stable")]
        remap = np.zeros(count + 1, dtype=raw.dtype)
        remap[order] = np.arange(1, count + 1)
        labels = remap[raw]
    region.labels = labels
    region.component_count = int(count)
    return region


def component_of(lam, region):
    """Component label of ``lam`` (0 when outside).

    Points in an outside cell snap to the nearest inside cell center within
    two cell diagonals.
    """
    lam = complex(lam)
    c = region.cell_of(lam)
    if c is not None and region.labels[c] > 0:
        return int(region.labels[c])
    reach = 2.0 * region.cell_diagonal
    i0 = int(np.floor((lam.real - region.box[0]) / region.dx))
    j0 = int(np.floor((lam.imag - region.box[2]) / region.dy))
    ri = int(np.ceil(reach / region.dx)) + 1
    rj = int(np.ceil(reach / region.dy)) + 1
    ilo, ihi = max(i0 - ri, 0), min(i0 + ri + 1, region.resolution[0])
    jlo, jhi = max(j0 - rj, 0), min(j0 + rj + 1, region.resolution[1])
    if ilo >= ihi or jlo >= jhi:
        return 0
    sub = region.labels[ilo:ihi, jlo:jhi]
    if not sub.any():
        return 0
    re = region.box[0] + (np.arange(ilo, ihi) + 0.5) * region.dx
    im = region.box[2] + (np.arange(jlo, jhi) + 0.5) * region.dy
    d = np.abs(re[:, None] + 1j * im[None, :] - lam)
    d[sub == 0] = np.inf
    k = np.unravel_index(np.argmin(d), d.shape)
    return int(sub[k]) if d[k] <= reach else 0


def component_sums(values, region, cluster_tol):
    """Per-component multiplicity sums of clustered ``values`` plus the unassigned count."""
    rep = cluster_spectrum(values, cluster_tol)
    sums = np.zeros(region.component_count + 1, dtype=int)
    for val, mult in rep.distinct:
        sums[component_of(val, region)] += mult
    return sums[1:], int(sums[0])


def component_eigen_report(A, S, eps, region, zs, cluster_tol=None):
    """Check that multiplicity sums per component do not depend on z.

    For every component T the baseline is the number of eigenvalues of A
    (with multiplicity) in T; each ``z`` (``||z|| < eps`` required) gives the
    same count for ``A + M_S(z)``.  Eigenvalues that fall in no component are
    listed as coverage violations.
    """
    A = check_matrix(A)
    eps = check_positive(eps, "eps")
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(A)
    zvecs = []
    for k, z in enumerate(zs):
        z = z.components if isinstance(z, PerturbationVector) else check_vector(z, S.s)
        if not np.linalg.norm(z) < eps:
            raise PreconditionError(f"z #{k} has norm {np.linalg.norm(z):.6g} >= eps={eps:g}")
        zvecs.append(z)
    baseline, unassigned = component_sums(eigenvalues(A), region, cluster_tol)

    def one(z):
        return component_sums(eigenvalues(perturbed(A, S, z)), region, cluster_tol)

    results = map_ordered(one, zvecs)
    violations = [(k, miss) for k, (_, miss) in enumerate(results) if miss]
    reports = []
    for c in range(region.component_count):
        per = [(k, int(sums[c])) for k, (sums, _) in enumerate(results)]
        reports.append(ComponentReport(
            component_id=c + 1,
            baseline_sum=int(baseline[c]),
            per_z_sums=per,
            conserved=all(v == baseline[c] for _, v in per),
            nonempty_for_all_z=all(v >= 1 for _, v in per),
        ))
    return ConservationReport(reports, violations, unassigned)


class StructuredPseudospectrum(BaseEstimator):
    """Estimator wrapper around :func:`grid_pseudospectrum`.

    ``fit(A)`` rasterizes the pseudospectrum; ``predict(points)`` returns the
    component label of each point (0 outside).

    Examples
    --------
    >>> import numpy as np
    >>> from pseudospec import StructuredPseudospectrum, StructurePattern
    >>> est = StructuredPseudospectrum(eps=0.25, structure=StructurePattern(2, [(2, 1)]),
    ...                                resolution=101, samples=200)
    >>> est.fit(np.array([[0, 1], [0, 0]])).n_components_
    1
    """

    def __init__(self, eps=0.1, structure=None, box=None, resolution=201, samples=2000, seed=0,
                 refine=True, strict=True, cluster_tol=None):
        self.eps = eps
        self.structure = structure
        self.box = box
        self.resolution = resolution
        self.samples = samples
        self.seed = seed
        self.refine = refine
        self.strict = strict
        self.cluster_tol = cluster_tol

    def fit(self, A, y=None):
        A = check_matrix(A)
        self.region_ = grid_pseudospectrum(
            A, self.structure, self.eps, box=self.box, resolution=self.resolution,
            samples=self.samples, seed=self.seed, refine=self.refine, strict=self.strict,
        )
        tol = default_cluster_tol(A) if self.cluster_tol is None else self.cluster_tol
        self.matrix_ = A
        self.spectrum_ = cluster_spectrum(eigenvalues(A), tol)
        self.n_components_ = self.region_.component_count
        return self

    def _check_fitted(self):
        if not hasattr(self, "region_"):
            from sklearn.exceptions import NotFittedError
            raise NotFittedError("call fit before using this estimator")

    def predict(self, X):
        self._check_fitted()
        pts = np.atleast_1d(np.asarray(X, dtype=complex)).ravel()
        return np.array([component_of(p, self.region_) for p in pts], dtype=int)

    def conservation_report(self, zs):
        self._check_fitted()
        if self.structure is None:
            raise PreconditionError("conservation reports need a structure")
        return component_eigen_report(self.matrix_, self.structure, self.eps, self.region_, zs,
                                      self.cluster_tol)
