import numpy as np


def jordan2():
    return np.array([[0, 1], [0, 0]], dtype=complex)


def jordan2_plus5():
    A = np.zeros((3, 3), dtype=complex)
    A[0, 1] = 1
    A[2, 2] = 5
    return A


def multiset_close(a, b, tol):
    """Greedy multiset comparison of two complex arrays."""
    a = list(np.asarray(a, dtype=complex))
    b = list(np.asarray(b, dtype=complex))
    if len(a) != len(b):
        return False
    for x in a:
        d = [abs(x - y) for y in b]
        k = int(np.argmin(d))
        if d[k] > tol:
            return False
        b.pop(k)
    return True


def random_instance(rng):
    """Random (A, S, eps) with n <= 5 and s in {1, 2, 3}."""
    from pseudospec import StructurePattern

    n = int(rng.integers(2, 6))
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    s = int(rng.integers(1, 4))
    flat = rng.choice(n * n, size=s, replace=False)
    S = StructurePattern(n, [(int(k) // n + 1, int(k) % n + 1) for k in flat])
    eps = float(rng.uniform(0.1, 2.0))
    return A, S, eps
