"""Characteristic polynomials, generalized Sylvester resultants and root counting.

Root multiplicity structure is read off the nullities of resultant matrices of
``f, f', ..., f^(k)``:

* ``N_k`` (distinct roots of multiplicity >= k) is a first difference of
  nullities along the derivative chain,
* ``rho_k`` (distinct roots of multiplicity exactly k) is a second difference,
* the number of distinct roots is ``n - nullity(R(f, f'))``.
"""

from dataclasses import dataclass
import numpy as np

from .core_linalg import eigenvalues
from .exceptions import HypothesisError, PreconditionError, StructureError
from .validation import check_matrix

RESULTANT_TOL_FACTOR = 1e-14


def _trim(coeffs):
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(1, dtype=complex)
    return c[nz[0]:].copy()


class GeneralPolynomial:
    """Polynomial with coefficients stored highest degree first."""

    def __init__(self, coeffs):
        c = _trim(coeffs)
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        self.coeffs = c

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return self.degree == 0 and self.coeffs[0] == 0

    def __call__(self, x):
        return np.polyval(self.coeffs, x)

    def __eq__(self, other):
        return isinstance(other, GeneralPolynomial) and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        return f"GeneralPolynomial({self.coeffs.tolist()})"


class MonicPolynomial(GeneralPolynomial):
    """Monic polynomial ``x^n + a_1 x^(n-1) + ... + a_n``.

    ``a`` holds ``[a_1, ..., a_n]``; the leading 1 is implicit.
    """

    def __init__(self, a):
        a = np.atleast_1d(np.asarray(a, dtype=complex)).ravel() if np.size(a) else np.zeros(0, complex)
        if not np.all(np.isfinite(a)):
            raise ValueError("polynomial coefficients must be finite")
        self.a = a
        self.coeffs = np.concatenate([[1.0 + 0j], a])

    @classmethod
    def from_roots(cls, roots):
        c = np.array([1.0 + 0j])
        for r in np.asarray(roots, dtype=complex).ravel():
            c = np.convolve(c, [1.0, -r])
        return cls(c[1:])

    @classmethod
    def from_coeffs(cls, coeffs):
        c = _trim(coeffs)
        return cls(c[1:] / c[0])

    def __repr__(self):
        return f"MonicPolynomial({self.a.tolist()})"


def char_poly(A):
    """Characteristic polynomial of ``A``, expanded from its eigenvalues."""
    A = check_matrix(A)
    return MonicPolynomial.from_roots(eigenvalues(A))


def derivative(p):
    """Formal derivative; the derivative of a constant is the zero polynomial."""
    c = p.coeffs
    d = len(c) - 1
    if d == 0:
        return GeneralPolynomial([0.0])
    return GeneralPolynomial(c[:-1] * np.arange(d, 0, -1))


def derivative_chain(f, k):
    """``[f', f'', ..., f^(k)]`` with exact integer factors."""
    out = []
    p = f
    for _ in range(k):
        p = derivative(p)
        out.append(p)
    return out


@dataclass
class ResultantMatrix:
    matrix: np.ndarray
    n: int
    h: int
    p: int

    @property
    def shape(self):
        return self.matrix.shape


def generalized_resultant(a, bs):
    """Stack the band matrices of ``a`` (p rows) and each ``b_i`` (n rows each).

    The result is ``(n*h + p) x (n + p)`` where ``p`` is the largest degree
    among the ``b_i``.  Every ``b_i`` row carries its coefficients of degree
    ``p`` down to 0, so lower-degree ``b_i`` start with zeros.
    """
    if not isinstance(a, MonicPolynomial):
        a = MonicPolynomial.from_coeffs(np.asarray(a.coeffs if hasattr(a, "coeffs") else a))
    bs = [b if isinstance(b, GeneralPolynomial) else GeneralPolynomial(b) for b in bs]
    if not bs:
        raise PreconditionError("at least one b polynomial is required")
    n = a.degree
    if all(b.is_zero() for b in bs):
        raise HypothesisError("all b polynomials are zero")
    p = max(b.degree for b in bs)
    if p > n:
        raise StructureError(f"max degree of b polynomials ({p}) exceeds deg a ({n})")
    if p < 1:
        raise HypothesisError("the b polynomials must have degree >= 1")
    h = len(bs)
    width = n + p
    R = np.zeros((n * h + p, width), dtype=complex)
    for r in range(p):
        R[r, r:r + n + 1] = a.coeffs
    for i, b in enumerate(bs):
        row = np.zeros(p + 1, dtype=complex)
        row[p - b.degree:] = b.coeffs
        base = p + i * n
        for r in range(n):
            R[base + r, r:r + p + 1] = row
    return ResultantMatrix(R, n, h, p)


def _equilibrated(M):
    norms = np.linalg.norm(M, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return M / norms


def resultant_singular_values(R):
    """Singular values of the row-equilibrated resultant.

    Scaling rows leaves the nullity unchanged but removes the factorial growth
    of the derivative rows, which otherwise swamps the small singular values.
    """
    return np.linalg.svd(_equilibrated(R.matrix), compute_uv=False)


def resultant_tol(R):
    """Default nullity threshold: ``2n * sigma_max * 1e-14`` on the equilibrated matrix."""
    return 2 * R.n * resultant_singular_values(R)[0] * RESULTANT_TOL_FACTOR


def _resultant_nullity(R, tol):
    sv = resultant_singular_values(R)
    if tol is None:
        tol = 2 * R.n * sv[0] * RESULTANT_TOL_FACTOR
    return int(R.matrix.shape[1] - np.count_nonzero(sv > tol))


def count_common_roots(a, bs, tol=None):
    """Degree of ``gcd(a, b_1, ..., b_h)`` as the nullity of their resultant."""
    return _resultant_nullity(generalized_resultant(a, bs), tol)


def _as_monic(f):
    if isinstance(f, MonicPolynomial):
        return f
    if isinstance(f, GeneralPolynomial):
        return MonicPolynomial.from_coeffs(f.coeffs)
    return MonicPolynomial(f)


def chain_nullity(f, k, tol=None):
    """Nullity of ``R(f, f', ..., f^(k))``.

    ``k = 0`` returns ``n`` by convention, and ``k >= n`` returns 0 since
    ``f^(n)`` is a nonzero constant.
    """
    f = _as_monic(f)
    n = f.degree
    if k < 0:
        raise PreconditionError(f"k must be nonnegative, got {k}")
    if k == 0:
        return n
    if k >= n:
        return 0
    return _resultant_nullity(generalized_resultant(f, derivative_chain(f, k)), tol)


def _check_k(f, k):
    if not 1 <= k <= f.degree:
        raise PreconditionError(f"k must lie in 1..{f.degree}, got {k}")


def count_roots_mult_at_least(f, k, tol=None):
    """Number of distinct roots of ``f`` with multiplicity >= k."""
    f = _as_monic(f)
    _check_k(f, k)
    return chain_nullity(f, k - 1, tol) - chain_nullity(f, k, tol)


def count_roots_mult_exact(f, k, tol=None):
    """Number of distinct roots of ``f`` with multiplicity exactly k."""
    f = _as_monic(f)
    _check_k(f, k)
    return chain_nullity(f, k - 1, tol) - 2 * chain_nullity(f, k, tol) + chain_nullity(f, k + 1, tol)


def count_distinct_roots(f, tol=None):
    f = _as_monic(f)
    if f.degree < 1:
        raise PreconditionError("polynomial degree must be >= 1")
    return f.degree - chain_nullity(f, 1, tol)


def root_structure(f, tol=None):
    """``{"u": ..., "N": [N_1..N_n], "rho": [rho_1..rho_n]}`` from one nullity chain."""
    f = _as_monic(f)
    n = f.degree
    if n < 1:
        raise PreconditionError("polynomial degree must be >= 1")
    nu = [chain_nullity(f, k, tol) for k in range(n + 1)] + [0]
    N = [nu[k - 1] - nu[k] for k in range(1, n + 1)]
    rho = [nu[k - 1] - 2 * nu[k] + nu[k + 1] for k in range(1, n + 1)]
    return {"u": n - nu[1], "N": N, "rho": rho}
