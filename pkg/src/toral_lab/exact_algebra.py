"""Exact integer/rational linear algebra and polynomial arithmetic.

Polynomials are monic with integer coefficients stored constant-term first.
Factorization over Q works by clustering high-precision numeric roots,
enumerating candidate root subsets, rounding the resulting coefficients to
integers and certifying each candidate by exact polynomial division.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath

from .errors import FactorizationFailed

_PREC_START = 64
_PREC_CAP = 1024


@dataclass(frozen=True)
class IntPolynomial:
    """Monic polynomial with exact integer coefficients, constant term first."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(int(a) for a in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        return self.coeffs[-1] == 1

    def __call__(self, x):
        out = 0
        for a in reversed(self.coeffs):
            out = out * x + a
        return out

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        a, b = self.coeffs, other.coeffs
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
        return IntPolynomial(tuple(out))

    def __pow__(self, k: int) -> "IntPolynomial":
        out = IntPolynomial((1,))
        for _ in range(k):
            out = out * self
        return out

    def divmod_exact(self, divisor: "IntPolynomial"):
        """Polynomial division by a monic divisor; exact over Z."""
        if not divisor.is_monic:
            raise ValueError("divisor must be monic")
        rem = list(self.coeffs)
        dd = divisor.degree
        if self.degree < dd:
            return IntPolynomial((0,)), self
        quot = [0] * (self.degree - dd + 1)
        for i in range(self.degree - dd, -1, -1):
            q = rem[i + dd]
            quot[i] = q
            if q:
                for j, b in enumerate(divisor.coeffs):
                    rem[i + j] -= q * b
        return IntPolynomial(tuple(quot)), IntPolynomial(tuple(rem[:dd] or [0]))

    def divides(self, other: "IntPolynomial") -> bool:
        _, r = other.divmod_exact(self)
        return all(c == 0 for c in r.coeffs)

    def reciprocal(self) -> "IntPolynomial":
        """Reversed-coefficient polynomial x^deg * p(1/x)."""
        return IntPolynomial(tuple(reversed(self.coeffs)))

    def is_self_reciprocal(self) -> bool:
        return tuple(reversed(self.coeffs)) == self.coeffs

    def to_json(self) -> list:
        return list(self.coeffs)


@dataclass
class IntMatrix:
    """Square integer matrix with exact cached determinant."""

    entries: list
    det: int = field(init=False)

    def __post_init__(self):
        self.entries = [[int(v) for v in row] for row in self.entries]
        d = len(self.entries)
        if any(len(row) != d for row in self.entries):
            raise ValueError("matrix must be square")
        self.det = _det_bareiss(self.entries)

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def in_GLdZ(self) -> bool:
        return self.det in (1, -1)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        a, b = self.entries, other.entries
        d = self.d
        return IntMatrix(
            [[sum(a[i][k] * b[k][j] for k in range(d)) for j in range(d)] for i in range(d)]
        )

    def transpose(self) -> "IntMatrix":
        return IntMatrix([list(col) for col in zip(*self.entries)])

    def inverse_exact(self) -> "IntMatrix":
        """Exact inverse for det = +-1, via the adjugate."""
        if not self.in_GLdZ:
            raise ValueError("exact inverse requires det in {+1, -1}")
        d = self.d
        adj = [[_cofactor(self.entries, j, i) for j in range(d)] for i in range(d)]
        s = self.det
        return IntMatrix([[v * s for v in row] for row in adj])

    def apply(self, vec):
        return [sum(r[j] * vec[j] for j in range(self.d)) for r in self.entries]

    def power(self, k: int) -> "IntMatrix":
        base = self if k >= 0 else self.inverse_exact()
        out = IntMatrix([[1 if i == j else 0 for j in range(self.d)] for i in range(self.d)])
        for _ in range(abs(k)):
            out = out @ base
        return out


def _det_bareiss(rows) -> int:
    """Fraction-free Bareiss determinant, exact over Z."""
    a = [list(r) for r in rows]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[-1][-1]


def _cofactor(rows, i, j) -> int:
    minor = [row[:j] + row[j + 1:] for k, row in enumerate(rows) if k != i]
    if not minor:
        return 1
    return (-1) ** (i + j) * _det_bareiss(minor)


def char_poly(M: IntMatrix) -> IntPolynomial:
    """Characteristic polynomial det(xI - M), exact and monic of degree d.

    Computed by exact integer determinants at d+1 sample points followed by
    Lagrange interpolation over Q; the result is certified integer.
    """
    d = M.d
    pts = list(range(d + 1))
    vals = []
    for t in pts:
        rows = [[(t if i == j else 0) - M.entries[i][j] for j in range(d)] for i in range(d)]
        vals.append(_det_bareiss(rows))
    coeffs = _lagrange_interp(pts, vals)
    out = []
    for c in coeffs:
        if c.denominator != 1:
            raise AssertionError("characteristic polynomial interpolation not integral")
        out.append(c.numerator)
    while len(out) < d + 1:
        out.append(0)
    return IntPolynomial(tuple(out))


def _lagrange_interp(xs, ys):
    """Coefficients (constant first, Fractions) of the interpolating polynomial."""
    n = len(xs)
    coeffs = [Fraction(0)] * n
    for i in range(n):
        # numerator polynomial prod_{j != i} (x - x_j)
        num = [Fraction(1)]
        denom = Fraction(1)
        for j in range(n):
            if j == i:
                continue
            num = _fmul(num, [Fraction(-xs[j]), Fraction(1)])
            denom *= Fraction(xs[i] - xs[j])
        scale = Fraction(ys[i]) / denom
        for k, c in enumerate(num):
            coeffs[k] += scale * c
    return coeffs


def _fmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _square_free_part(p: IntPolynomial) -> IntPolynomial:
    """Monic p / gcd(p, p') via exact Euclid over Q; same irreducible factors,
    all with multiplicity one."""
    a = [Fraction(c) for c in p.coeffs]
    b = [Fraction((i + 1) * c) for i, c in enumerate(p.coeffs[1:])]

    def trim(c):
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        return c

    def poly_mod(x, y):
        x = list(x)
        while len(x) >= len(y) and any(x):
            q = x[-1] / y[-1]
            off = len(x) - len(y)
            for i, yi in enumerate(y):
                x[off + i] -= q * yi
            trim(x)
            if all(c == 0 for c in x):
                return [Fraction(0)]
        return x

    while any(c != 0 for c in b):
        a, b = b, poly_mod(a, b)
    g = [c / a[-1] for c in a]   # monic gcd over Q
    if len(g) == 1:
        return p
    # exact division p / g, result has integer coefficients and is monic
    rest = [Fraction(c) for c in p.coeffs]
    out = [Fraction(0)] * (len(rest) - len(g) + 1)
    for i in range(len(out) - 1, -1, -1):
        out[i] = rest[i + len(g) - 1]
        for j, gj in enumerate(g):
            rest[i + j] -= out[i] * gj
    assert all(c.denominator == 1 for c in out)
    return IntPolynomial(tuple(int(c) for c in out))


def _roots_at_precision(p: IntPolynomial, prec_bits: int):
    with mpmath.workprec(prec_bits):
        coeffs = [mpmath.mpf(c) for c in reversed(p.coeffs)]
        try:
            roots, err = mpmath.polyroots(coeffs, maxsteps=200,
                                          extraprec=prec_bits, error=True)
        except mpmath.libmp.libhyper.NoConvergence:
            raise _CertificationMiss
        return [mpmath.mpc(r) for r in roots], float(err)


def _candidate_factor(roots, idxs, prec_bits):
    """Monic integer polynomial from a root subset, or None if not near-integer."""
    with mpmath.workprec(prec_bits):
        poly = [mpmath.mpc(1)]
        for i in idxs:
            r = roots[i]
            poly = [mpmath.mpc(0)] + poly
            for k in range(len(poly) - 1):
                poly[k] -= r * poly[k + 1]
        out = []
        for c in poly:
            n = int(mpmath.nint(c.real))
            if abs(c.real - n) > 1e-6 or abs(c.imag) > 1e-6:
                return None
            out.append(n)
    return IntPolynomial(tuple(out))


def factor_over_Q(p: IntPolynomial) -> list:
    """Irreducible factorization over Q of a monic integer polynomial.

    Returns a list of (factor, multiplicity) with factors monic over Z,
    certified by exact division; the product reassembles p exactly.
    Raises FactorizationFailed if no certification succeeds below the
    precision cap.
    """
    if not p.is_monic:
        raise ValueError("polynomial must be monic")
    if p.degree == 0:
        return []
    prec = _PREC_START
    while prec <= _PREC_CAP:
        try:
            factors = _factor_attempt(p, prec)
        except _CertificationMiss:
            prec *= 2
            continue
        return factors
    raise FactorizationFailed(f"no certified factorization of {p.coeffs} at {_PREC_CAP} bits")


class _CertificationMiss(Exception):
    pass


def _factor_attempt(p: IntPolynomial, prec_bits: int):
    factors = []
    rest = p
    while rest.degree > 0:
        # root finding needs simple roots; multiplicities are recovered below
        q = _smallest_factor(_square_free_part(rest), prec_bits)
        mult = 0
        while q.divides(rest):
            rest, _ = rest.divmod_exact(q)
            mult += 1
        factors.append((q, mult))
    check = IntPolynomial((1,))
    for q, m in factors:
        check = check * q ** m
    if check.coeffs != p.coeffs:
        raise _CertificationMiss
    factors.sort(key=lambda fm: (fm[0].degree, fm[0].coeffs))
    return factors


def _smallest_factor(p: IntPolynomial, prec_bits: int) -> IntPolynomial:
    """Minimal-degree certified monic integer divisor of p (hence irreducible)."""
    roots, _ = _roots_at_precision(p, prec_bits)
    n = len(roots)
    for size in range(1, n + 1):
        for idxs in itertools.combinations(range(n), size):
            cand = _candidate_factor(roots, idxs, prec_bits)
            if cand is None or cand.degree != size:
                continue
            if cand.divides(p):
                return cand
    raise _CertificationMiss


@lru_cache(maxsize=None)
def euler_phi(m: int) -> int:
    out = m
    k = 2
    mm = m
    while k * k <= mm:
        if mm % k == 0:
            out -= out // k
            while mm % k == 0:
                mm //= k
        k += 1
    if mm > 1:
        out -= out // mm
    return out


@lru_cache(maxsize=None)
def cyclotomic(m: int) -> IntPolynomial:
    """m-th cyclotomic polynomial via exact recursive division of x^m - 1."""
    num = IntPolynomial(tuple([-1] + [0] * (m - 1) + [1]))
    for d in range(1, m):
        if m % d == 0:
            num, rem = num.divmod_exact(cyclotomic(d))
            assert all(c == 0 for c in rem.coeffs)
    return num


def has_root_of_unity_factor(p: IntPolynomial):
    """Whether some cyclotomic polynomial divides p; returns (bool, witness m).

    Enumerates every m with euler_phi(m) <= deg p.
    """
    d = p.degree
    m = 1
    # phi(m) >= sqrt(m/2), so phi(m) <= d forces m <= 2 d^2 + 1
    while m <= 2 * d * d + 1:
        if euler_phi(m) <= d and cyclotomic(m).divides(p):
            return True, m
        m += 1
    return False, None


def integer_kernel(rows) -> list:
    """Primitive integer basis of {n : M n = 0} via exact elimination over Q.

    Accepts any integer matrix (possibly non-square, as a list of rows).
    Basis vectors are primitive (content 1), sign-normalized so the first
    nonzero entry is positive, and sorted lexicographically.
    """
    if not rows:
        return []
    m = len(rows)
    n = len(rows[0])
    a = [[Fraction(v) for v in row] for row in rows]
    pivots = []
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, m):
            if a[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = 1 / a[r][c]
        a[r] = [v * inv for v in a[r]]
        for i in range(m):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            vec[pc] = -a[ri][fc]
        basis.append(_primitive(vec))
    basis.sort()
    return basis


def _primitive(vec):
    lcm = 1
    for v in vec:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    ints = [int(v * lcm) for v in vec]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    for v in ints:
        if v != 0:
            if v < 0:
                ints = [-x for x in ints]
            break
    return ints


def dereciprocal(p: IntPolynomial) -> IntPolynomial:
    """For self-reciprocal p of even degree 2k, the monic q with p(x) = x^k q(x + 1/x)."""
    if not p.is_self_reciprocal() or p.degree % 2 != 0:
        raise ValueError("requires self-reciprocal polynomial of even degree")
    k = p.degree // 2
    # Chebyshev-like basis T_j(y) = x^j + x^-j: T_0 = 2, T_1 = y, T_j = y T_{j-1} - T_{j-2}
    t_prev = [2]
    t_cur = [0, 1]
    q = [p.coeffs[k]]
    for j in range(1, k + 1):
        if j >= 2:
            t = [0] + t_cur
            for i, c in enumerate(t_prev):
                t[i] -= c
            t_prev, t_cur = t_cur, t
        a = p.coeffs[k + j]
        while len(q) < len(t_cur):
            q.append(0)
        for i, c in enumerate(t_cur):
            q[i] += a * c
    return IntPolynomial(tuple(q))


def count_real_roots_open(p: IntPolynomial, lo, hi) -> int:
    """Number of distinct real roots of p in the open interval (lo, hi), by Sturm chains."""
    lo, hi = Fraction(lo), Fraction(hi)
    chain = _sturm_chain([Fraction(c) for c in p.coeffs])
    return _sign_changes(chain, lo) - _sign_changes(chain, hi)


def _sturm_chain(coeffs):
    def deriv(c):
        return [i * v for i, v in enumerate(c)][1:] or [Fraction(0)]

    def rem(a, b):
        a = a[:]
        while len(a) >= len(b) and any(v != 0 for v in a):
            if a[-1] == 0:
                a.pop()
                continue
            f = a[-1] / b[-1]
            shift = len(a) - len(b)
            for i, v in enumerate(b):
                a[shift + i] -= f * v
            a.pop()
        while len(a) > 1 and a[-1] == 0:
            a.pop()
        return a

    chain = [coeffs[:], deriv(coeffs)]
    while len(chain[-1]) > 1 or chain[-1][0] != 0:
        r = rem(chain[-2][:], chain[-1])
        r = [-v for v in r]
        if all(v == 0 for v in r):
            break
        chain.append(r)
    return chain


def _sign_changes(chain, x):
    signs = []
    for c in chain:
        v = 0
        for a in reversed(c):
            v = v * x + a
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def unit_circle_root_count(p: IntPolynomial) -> int:
    """Exact count of roots of an irreducible monic p lying on the unit circle.

    Roots of a cyclotomic factor all lie on the circle. Otherwise circle
    roots come in conjugate/reciprocal pairs, forcing p self-reciprocal of
    even degree; the pairs correspond to real roots of the dereciprocal
    transform in (-2, 2), counted exactly by Sturm chains.
    """
    is_cyc, _ = has_root_of_unity_factor(p)
    if is_cyc:
        # p irreducible with a cyclotomic divisor is itself cyclotomic
        return p.degree
    if p.degree % 2 == 0 and p.is_self_reciprocal():
        q = dereciprocal(p)
        return 2 * count_real_roots_open(q, -2, 2)
    return 0
