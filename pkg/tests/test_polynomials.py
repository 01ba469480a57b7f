import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pseudospec import (
    GeneralPolynomial,
    HypothesisError,
    MonicPolynomial,
    PreconditionError,
    StructureError,
    char_poly,
    count_common_roots,
    count_distinct_roots,
    count_roots_mult_at_least,
    count_roots_mult_exact,
    derivative,
    generalized_resultant,
    root_structure,
)
from pseudospec.polynomials import derivative_chain

from planted import expected_counts, planted_gcd_pair, planted_polynomial


def test_general_polynomial_trims_leading_zeros():
    p = GeneralPolynomial([0, 0, 1, 2])
    assert p.degree == 1
    assert np.array_equal(p.coeffs, [1, 2])
    assert GeneralPolynomial([0, 0]).is_zero()


def test_monic_layout():
    f = MonicPolynomial([-3, 2])
    assert f.degree == 2
    assert np.array_equal(f.coeffs, [1, -3, 2])
    assert f(1) == 0 and f(2) == 0


def test_from_coeffs_normalizes():
    f = MonicPolynomial.from_coeffs([2, -6, 4])
    assert np.allclose(f.a, [-3, 2])


def test_derivative_exact_integer_factors():
    f = MonicPolynomial([2, 3, 4])
    d = derivative(f)
    assert np.array_equal(d.coeffs, [3, 4, 3])
    chain = derivative_chain(f, 3)
    assert np.array_equal(chain[1].coeffs, [6, 4])
    assert np.array_equal(chain[2].coeffs, [6])


def test_char_poly_of_jordan_plus_five():
    A = np.array([[0, 1, 0], [0, 0, 0], [0, 0, 5]])
    f = char_poly(A)
    assert np.allclose(f.coeffs, [1, -5, 0, 0], atol=1e-12)


def test_resultant_layout():
    a = MonicPolynomial([1, 2, 3])
    b = GeneralPolynomial([4, 5])
    R = generalized_resultant(a, [b]).matrix
    expected = np.array([
        [1, 1, 2, 3],
        [4, 5, 0, 0],
        [0, 4, 5, 0],
        [0, 0, 4, 5],
    ])
    assert np.array_equal(R, expected)


def test_resultant_lower_degree_b_padded():
    a = MonicPolynomial([0, 0, 0])
    R = generalized_resultant(a, [GeneralPolynomial([1, 0, 0]), GeneralPolynomial([7])]).matrix
    assert R.shape == (3 * 2 + 2, 5)
    assert np.array_equal(R[5, :3], [0, 0, 7])


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 8), h=st.integers(1, 4), data=st.data())
def test_resultant_shape(n, h, data):
    degs = [data.draw(st.integers(1, n)) for _ in range(h)]
    a = MonicPolynomial(np.ones(n))
    bs = [GeneralPolynomial(np.ones(d + 1)) for d in degs]
    R = generalized_resultant(a, bs)
    p = max(degs)
    assert R.shape == (n * h + p, n + p)


def test_resultant_hypothesis_errors():
    a = MonicPolynomial([1, 1])
    with pytest.raises(HypothesisError):
        generalized_resultant(a, [GeneralPolynomial([0])])
    with pytest.raises(HypothesisError):
        generalized_resultant(a, [GeneralPolynomial([3])])
    with pytest.raises(StructureError):
        generalized_resultant(a, [GeneralPolynomial([1, 0, 0, 0])])


def test_common_root_examples():
    f = MonicPolynomial.from_roots([1, 1])
    assert count_common_roots(f, [derivative(f)]) == 1
    g = MonicPolynomial.from_roots([1, 2, 3])
    assert count_common_roots(g, [GeneralPolynomial(MonicPolynomial.from_roots([2, 3]).coeffs)]) == 2
    assert count_common_roots(g, [GeneralPolynomial([1, -7])]) == 0


def test_mult_at_least_examples():
    f = MonicPolynomial.from_roots([1, 1, -2])
    assert [count_roots_mult_at_least(f, k) for k in (1, 2, 3)] == [2, 1, 0]
    g = MonicPolynomial.from_roots([0] * 5)
    assert count_roots_mult_at_least(g, 5) == 1
    assert count_roots_mult_at_least(MonicPolynomial([0, -1]), 2) == 0


def test_mult_exact_examples():
    f = MonicPolynomial.from_roots([1, 1, -2])
    assert [count_roots_mult_exact(f, k) for k in (1, 2, 3)] == [1, 1, 0]
    g = MonicPolynomial.from_roots([0, 0, 0])
    assert [count_roots_mult_exact(g, k) for k in (1, 2, 3)] == [0, 0, 1]
    h = MonicPolynomial.from_roots([1, 2, 3])
    assert count_roots_mult_exact(h, 1) == 3


def test_distinct_examples():
    assert count_distinct_roots(MonicPolynomial.from_roots([1, 1])) == 1
    assert count_distinct_roots(MonicPolynomial([0, -1])) == 2
    assert count_distinct_roots(MonicPolynomial.from_roots([1, 1, -2, -2, -2])) == 2


def test_k_out_of_range():
    f = MonicPolynomial.from_roots([1, 2])
    for bad in (0, 3):
        with pytest.raises(PreconditionError):
            count_roots_mult_at_least(f, bad)
        with pytest.raises(PreconditionError):
            count_roots_mult_exact(f, bad)


def test_planted_oracle_sample():
    rng = np.random.default_rng(1234)
    for n in range(2, 9):
        for _ in range(15):
            f, mults = planted_polynomial(rng, n)
            assert root_structure(f) == expected_counts(mults, n)


@settings(max_examples=80, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2**31 - 1))
def test_counting_identities(n, seed):
    f, mults = planted_polynomial(np.random.default_rng(seed), n)
    rs = root_structure(f)
    assert sum(k * r for k, r in enumerate(rs["rho"], start=1)) == n
    assert sum(rs["rho"]) == rs["u"]
    assert rs["N"][0] == rs["u"]
    assert all(a >= b for a, b in zip(rs["N"], rs["N"][1:]))


def test_barnett_derivative_cross_check():
    rng = np.random.default_rng(77)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        f, mults = planted_polynomial(rng, n)
        assert count_common_roots(f, [derivative(f)]) == sum(m - 1 for m in mults)


def test_planted_gcd_pairs():
    rng = np.random.default_rng(5)
    for d in range(4):
        for _ in range(10):
            f, g = planted_gcd_pair(rng, d)
            assert count_common_roots(f, [g]) == d


def test_explicit_tolerance_override():
    f = MonicPolynomial.from_roots([0, 1e-3])
    assert count_distinct_roots(f) == 2
    assert count_distinct_roots(f, tol=1e-2) == 1
