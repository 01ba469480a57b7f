"""Perturbation structures: which entries of A may move, and by how much.

Positions are 1-based in the public API and in files, 0-based internally.
"""

import numpy as np

from .exceptions import DimensionError, PreconditionError, StructureError
from .validation import check_matrix, check_vector

STRICT_SHRINK = 1.0 - 1e-9


class StructurePattern:
    """An ordered set of matrix positions that a perturbation may change.

    Parameters
    ----------
    n : int
        Matrix dimension.
    positions : iterable of (row, col)
        1-based positions.  They are sorted lexicographically; duplicates and
        out-of-range positions raise StructureError.
    """

    def __init__(self, n, positions):
        n = int(n)
        if n < 1:
            raise StructureError(f"matrix dimension must be positive, got {n}")
        pos = [(int(i), int(j)) for i, j in positions]
        if not pos:
            raise StructureError("a structure needs at least one position")
        if len(set(pos)) != len(pos):
            raise StructureError("duplicate positions in structure")
        for i, j in pos:
            if not (1 <= i <= n and 1 <= j <= n):
                raise StructureError(f"position ({i}, {j}) outside 1..{n}")
        self.n = n
        self.positions = sorted(pos)
        self.rows = np.array([i - 1 for i, _ in self.positions], dtype=int)
        self.cols = np.array([j - 1 for _, j in self.positions], dtype=int)

    @classmethod
    def full(cls, n):
        return cls(n, [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)])

    @property
    def s(self):
        return len(self.positions)

    def __len__(self):
        return self.s

    def __eq__(self, other):
        return isinstance(other, StructurePattern) and (self.n, self.positions) == (other.n, other.positions)

    def __repr__(self):
        return f"StructurePattern(n={self.n}, positions={self.positions})"


class PerturbationVector:
    """Complex vector z in C^s with its cached Euclidean norm."""

    def __init__(self, components):
        self.components = check_vector(components)
        self.euclidean_norm = float(np.linalg.norm(self.components))

    def __array__(self, dtype=None, copy=None):
        return self.components if dtype is None else self.components.astype(dtype)

    def __len__(self):
        return self.components.shape[0]

    def __repr__(self):
        return f"PerturbationVector({self.components.tolist()})"


def _components(z, s):
    if isinstance(z, PerturbationVector):
        z = z.components
    return check_vector(z, length=s)


def embed(S, z):
    """The n x n matrix with z_k at position k of S and zeros elsewhere."""
    z = _components(z, S.s)
    M = np.zeros((S.n, S.n), dtype=complex)
    M[S.rows, S.cols] = z
    return M


def extract(S, M):
    M = check_matrix(M, name="M")
    if M.shape[0] != S.n:
        raise DimensionError(f"matrix is {M.shape[0]}x{M.shape[0]}, structure expects n={S.n}")
    return PerturbationVector(M[S.rows, S.cols])


def perturbed(A, S, z):
    """A + M_S(z)."""
    A = check_matrix(A)
    if A.shape[0] != S.n:
        raise DimensionError(f"matrix is {A.shape[0]}x{A.shape[0]}, structure expects n={S.n}")
    return A + embed(S, z)


def perturbed_batch(A, S, Z):
    """Stack of A + M_S(z) for each row z of ``Z`` (shape (m, s))."""
    Z = np.asarray(Z, dtype=complex)
    out = np.broadcast_to(np.asarray(A, dtype=complex), (Z.shape[0], S.n, S.n)).copy()
    out[:, S.rows, S.cols] += Z
    return out


def sample_ball(s, radius, strict=True, count=1, seed=0):
    """Deterministic samples from the complex ball ``||z|| <= radius`` in C^s.

    Directions are uniform on the sphere and radii follow ``radius * U^(1/2s)``,
    giving the uniform distribution on the 2s-dimensional real ball.  When
    ``count >= 2s`` the first 2s samples are the boundary points
    ``+-radius * e_k``.  With ``strict`` every radius is shrunk by ``1 - 1e-9``.
    """
    s = int(s)
    count = int(count)
    if radius <= 0 or not np.isfinite(radius):
        raise PreconditionError(f"radius must be positive, got {radius}")
    if count < 1 or s < 1:
        raise PreconditionError(f"count and s must be positive, got count={count}, s={s}")
    R = radius * STRICT_SHRINK if strict else float(radius)
    rng = np.random.default_rng(seed)
    out = []
    if count >= 2 * s:
        for k in range(s):
            for sign in (1.0, -1.0):
                e = np.zeros(s, dtype=complex)
                e[k] = sign * R
                out.append(e)
    m = count - len(out)
    if m > 0:
        g = rng.standard_normal((m, s)) + 1j * rng.standard_normal((m, s))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = R * rng.random(m) ** (1.0 / (2 * s))
        out.extend(g * r[:, None])
    return [PerturbationVector(z) for z in out]
