"""Exact integer algebra: char polys, certified factorization, cyclotomics,
integer kernels."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toral_lab import exact_algebra as ea


def _random_monic(rng, deg, cmax=5):
    return ea.IntPolynomial(tuple(rng.randint(-cmax, cmax) for _ in range(deg)) + (1,))


# ---------------------------------------------------------------- IntPolynomial

small_int = st.integers(min_value=-6, max_value=6)


@given(st.lists(small_int, min_size=1, max_size=6), st.lists(small_int, min_size=1, max_size=6))
def test_poly_product_matches_numpy(a, b):
    pa = ea.IntPolynomial(tuple(a) + (1,))
    pb = ea.IntPolynomial(tuple(b) + (1,))
    got = (pa * pb).coeffs
    want = np.polynomial.polynomial.polymul(list(pa.coeffs), list(pb.coeffs))
    assert list(got) == [int(round(c)) for c in want]


@given(st.lists(small_int, min_size=1, max_size=5), st.lists(small_int, min_size=1, max_size=5))
def test_divmod_exact_roundtrip(a, b):
    pa = ea.IntPolynomial(tuple(a) + (1,))
    pb = ea.IntPolynomial(tuple(b) + (1,))
    prod = pa * pb
    q, r = prod.divmod_exact(pb)
    assert q.coeffs == pa.coeffs
    assert all(c == 0 for c in r.coeffs)


def test_reciprocal_involution():
    p = ea.IntPolynomial((2, -3, 0, 1))
    assert p.reciprocal().reciprocal().coeffs == p.coeffs
    salem = ea.IntPolynomial((1, -1, -1, -1, 1))
    assert salem.is_self_reciprocal()


# ---------------------------------------------------------------- char_poly

def test_char_poly_cat_map():
    assert ea.char_poly(ea.IntMatrix([[2, 1], [1, 1]])).coeffs == (1, -3, 1)


def test_char_poly_vs_numpy_oracle():
    rng = random.Random(7)
    for _ in range(50):
        d = rng.randint(1, 5)
        M = ea.IntMatrix([[rng.randint(-4, 4) for _ in range(d)] for _ in range(d)])
        got = ea.char_poly(M)
        # numpy returns leading-first coefficients of det(xI - M)
        want = np.poly(np.array(M.entries, dtype=float))
        assert list(got.coeffs) == [int(round(c)) for c in want[::-1]]


def test_char_poly_companion():
    # companion matrix of p has char poly p
    coeffs = (3, -2, 0, 5, 1)
    d = 4
    C = [[0] * d for _ in range(d)]
    for i in range(1, d):
        C[i][i - 1] = 1
    for i in range(d):
        C[i][d - 1] = -coeffs[i]
    assert ea.char_poly(ea.IntMatrix(C)).coeffs == coeffs


# ---------------------------------------------------------------- IntMatrix

@given(st.integers(min_value=0, max_value=10 ** 6))
def test_det_multiplicative(seed):
    rng = random.Random(seed)
    d = rng.randint(1, 4)
    A = [[rng.randint(-3, 3) for _ in range(d)] for _ in range(d)]
    B = [[rng.randint(-3, 3) for _ in range(d)] for _ in range(d)]
    detA = ea._det_bareiss(A)
    detB = ea._det_bareiss(B)
    prod = ea.IntMatrix(A) @ ea.IntMatrix(B)
    assert ea._det_bareiss(prod.entries) == detA * detB


def test_inverse_exact():
    M = ea.IntMatrix([[2, 1], [1, 1]])
    I2 = M @ M.inverse_exact()
    assert I2.entries == [[1, 0], [0, 1]]
    with pytest.raises(Exception):
        ea.IntMatrix([[2, 0], [0, 2]]).inverse_exact()


def test_power_negative_and_zero():
    M = ea.IntMatrix([[2, 1], [1, 1]])
    assert M.power(0).entries == [[1, 0], [0, 1]]
    assert (M.power(3) @ M.power(-3)).entries == [[1, 0], [0, 1]]


def test_power_large_exact():
    # entries exceed int64 around n = 45; must stay exact
    M = ea.IntMatrix([[2, 1], [1, 1]])
    P = M.power(90)
    fib = [0, 1]
    for _ in range(200):
        fib.append(fib[-1] + fib[-2])
    # M^n = [[F(2n+1), F(2n)], [F(2n), F(2n-1)]]
    assert P.entries[0][1] == fib[180]


# ---------------------------------------------------------------- factorization

def test_factor_roundtrip_random_products():
    rng = random.Random(123)
    for _ in range(60):
        k = rng.randint(1, 3)
        parts = [_random_monic(rng, rng.randint(1, 4)) for _ in range(k)]
        prod = ea.IntPolynomial((1,))
        for q in parts:
            prod = prod * q
        factors = ea.factor_over_Q(prod)
        rebuilt = ea.IntPolynomial((1,))
        for q, m in factors:
            rebuilt = rebuilt * q ** m
        assert rebuilt.coeffs == prod.coeffs
        for q, _ in factors:
            assert q.is_monic and q.divides(prod)


def test_factor_known_splittings():
    # x^4 - 1 = (x-1)(x+1)(x^2+1)
    p = ea.IntPolynomial((-1, 0, 0, 0, 1))
    fac = ea.factor_over_Q(p)
    assert sorted((q.coeffs, m) for q, m in fac) == [
        ((-1, 1), 1), ((1, 0, 1), 1), ((1, 1), 1)]
    # repeated factor
    q = ea.IntPolynomial((1, 1)) ** 3
    fac = ea.factor_over_Q(q)
    assert fac == [(ea.IntPolynomial((1, 1)), 3)]


def test_factor_irreducible_stays_whole():
    salem = ea.IntPolynomial((1, -1, -1, -1, 1))
    fac = ea.factor_over_Q(salem)
    assert len(fac) == 1 and fac[0][1] == 1
    assert fac[0][0].coeffs == salem.coeffs


# ---------------------------------------------------------------- cyclotomics

def _polymul_int(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _polydiv_int(a, b):
    # exact synthetic division of integer polynomials, b monic up to sign
    a = list(a)
    q = [0] * (len(a) - len(b) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = a[i + len(b) - 1] // b[-1]
        q[i] = c
        for j, y in enumerate(b):
            a[i + j] -= c * y
    assert all(x == 0 for x in a[:len(b) - 1])
    return q


def _cyclotomic_oracle(m):
    """Moebius product Phi_m = prod_{d|m} (x^{m/d} - 1)^{mu(d)}, exactly."""
    def mu(n):
        out, k = 1, 2
        while k * k <= n:
            if n % k == 0:
                n //= k
                if n % k == 0:
                    return 0
                out = -out
            k += 1
        return -out if n > 1 else out

    num = [1]
    den = [1]
    for d in range(1, m + 1):
        if m % d == 0:
            cycl = [-1] + [0] * (m // d - 1) + [1]
            if mu(d) == 1:
                num = _polymul_int(num, cycl)
            elif mu(d) == -1:
                den = _polymul_int(den, cycl)
    return tuple(_polydiv_int(num, den))


def test_cyclotomic_brute_force_oracle():
    for m in range(1, 101):
        assert ea.cyclotomic(m).coeffs == _cyclotomic_oracle(m)
        assert ea.cyclotomic(m).degree == ea.euler_phi(m)


def test_root_of_unity_detection():
    found, m = ea.has_root_of_unity_factor(ea.IntPolynomial((1, 1, 1)))  # Phi_3
    assert found and m == 3
    found, _ = ea.has_root_of_unity_factor(ea.IntPolynomial((1, -3, 1)))
    assert not found
    # Salem factor has unit-circle roots but none are roots of unity
    found, _ = ea.has_root_of_unity_factor(ea.IntPolynomial((1, -1, -1, -1, 1)))
    assert not found


def test_unit_circle_root_count():
    assert ea.unit_circle_root_count(ea.IntPolynomial((1, -1, -1, -1, 1))) == 2
    assert ea.unit_circle_root_count(ea.IntPolynomial((1, -3, 1))) == 0
    assert ea.unit_circle_root_count(ea.IntPolynomial((1, 0, 1))) == 2


# ---------------------------------------------------------------- integer kernel

def test_integer_kernel_known():
    # kernel of [[1, -2]] is spanned by (2, 1)
    assert ea.integer_kernel([[1, -2]]) == [[2, 1]]


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=40)
def test_integer_kernel_membership_and_rank(seed):
    rng = random.Random(seed)
    rows_n = rng.randint(1, 3)
    cols = rng.randint(1, 4)
    M = [[rng.randint(-3, 3) for _ in range(cols)] for _ in range(rows_n)]
    basis = ea.integer_kernel(M)
    rank = np.linalg.matrix_rank(np.array(M, dtype=float)) if any(
        any(r) for r in M) else 0
    assert len(basis) == cols - rank
    for v in basis:
        assert all(sum(a * b for a, b in zip(row, v)) == 0 for row in M)
        assert math.gcd(*[abs(x) for x in v]) if len(v) > 1 else True
        first = next(x for x in v if x != 0)
        assert first > 0
