"""Random polynomials with a known root structure, used as oracles."""

import numpy as np

from pseudospec.polynomials import GeneralPolynomial, MonicPolynomial


def separated_roots(rng, count, gap=0.5, radius=2.0):
    roots = []
    while len(roots) < count:
        r = radius * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        if all(abs(r - q) >= gap for q in roots):
            roots.append(r)
    return np.array(roots)


def random_partition(rng, n):
    """Random composition of n into positive parts."""
    parts = []
    left = n
    while left:
        m = int(rng.integers(1, left + 1))
        parts.append(m)
        left -= m
    return parts


def planted_polynomial(rng, n):
    """(f, mults) with f = prod (x - r_i)^m_i, well separated roots."""
    mults = random_partition(rng, n)
    roots = separated_roots(rng, len(mults))
    f = MonicPolynomial.from_roots(np.repeat(roots, mults))
    return f, mults


def expected_counts(mults, n):
    N = [sum(1 for m in mults if m >= k) for k in range(1, n + 1)]
    rho = [sum(1 for m in mults if m == k) for k in range(1, n + 1)]
    return {"u": len(mults), "N": N, "rho": rho}


def planted_gcd_pair(rng, d):
    """Monic f and general g whose gcd has degree exactly d."""
    extra_f = int(rng.integers(1, 4))
    extra_g = int(rng.integers(0 if d else 1, extra_f + 1))
    roots = separated_roots(rng, d + extra_f + extra_g)
    common, rf, rg = roots[:d], roots[d:d + extra_f], roots[d + extra_f:]
    f = MonicPolynomial.from_roots(np.concatenate([common, rf]))
    lead = complex(rng.standard_normal(), rng.standard_normal())
    g = GeneralPolynomial(lead * MonicPolynomial.from_roots(np.concatenate([common, rg])).coeffs)
    return f, g
