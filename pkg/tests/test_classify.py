"""Classification predicates and their GL(d,Z)-conjugation invariance."""

import random

import pytest

from toral_lab import classify as cls
from toral_lab.errors import NotInGLdZ
from toral_lab.exact_algebra import IntMatrix, integer_kernel
from toral_lab import spectral

CAT = IntMatrix([[2, 1], [1, 1]])
SALEM = IntMatrix([[0, 0, 0, -1], [1, 0, 0, 1], [0, 1, 0, 1], [0, 0, 1, 1]])
BLOCK = IntMatrix([[2, 1, 0, 0], [1, 1, 0, 0], [0, 0, 3, 2], [0, 0, 1, 1]])


def test_cat_map_record():
    rec = cls.classify(CAT)
    assert rec.in_GLdZ and rec.hyperbolic and rec.ergodic
    assert rec.irreducible and rec.weakly_irreducible and rec.very_weakly_irreducible
    assert not rec.partially_hyperbolic
    assert rec.witness is None


def test_block_diag_not_vwi_with_exact_witness():
    rec = cls.classify(BLOCK)
    assert rec.in_GLdZ and rec.hyperbolic and rec.ergodic
    assert not rec.irreducible
    assert not rec.very_weakly_irreducible
    assert rec.witness is not None
    # witness lies in the integer kernel of p_k(M) for an offending factor:
    # verify against each rational block exactly and demand a hit
    sp = spectral.build_splitting(BLOCK)
    hits = 0
    for fac, mult, kern in sp.rational_blocks:
        pM = spectral._poly_of_matrix(fac ** mult, BLOCK)
        if all(sum(a * b for a, b in zip(row, rec.witness)) == 0
               for row in pM.entries):
            hits += 1
            # the factor this witness certifies must miss rho_max or rho_min
            mods = cls._factor_moduli(fac)
            attains = (abs(float(max(mods)) - rec.rho_max) < 1e-9
                       and abs(float(min(mods)) - rec.rho_min) < 1e-9)
            assert not attains
    assert hits >= 1


def test_salem_partially_hyperbolic_ergodic():
    rec = cls.classify(SALEM)
    assert rec.partially_hyperbolic and not rec.hyperbolic
    assert rec.ergodic
    assert rec.irreducible and rec.very_weakly_irreducible


def test_non_ergodic_rotation():
    rec = cls.classify(IntMatrix([[0, -1], [1, 0]]))
    assert not rec.ergodic and not rec.hyperbolic


def test_not_in_gldz():
    rec = cls.classify(IntMatrix([[2, 0], [0, 2]]))
    assert not rec.in_GLdZ


def _random_gldz(rng, d, steps=6):
    """Random product of elementary integer shear matrices (det = 1)."""
    U = IntMatrix([[1 if i == j else 0 for j in range(d)] for i in range(d)])
    for _ in range(steps):
        i, j = rng.sample(range(d), 2)
        E = [[1 if a == b else 0 for b in range(d)] for a in range(d)]
        E[i][j] = rng.randint(-2, 2)
        U = U @ IntMatrix(E)
    return U


@pytest.mark.parametrize("M", [CAT, SALEM, BLOCK])
def test_conjugation_invariance(M):
    rng = random.Random(11)
    rec = cls.classify(M)
    for _ in range(3):
        U = _random_gldz(rng, M.d)
        conj = U @ M @ U.inverse_exact()
        rec2 = cls.classify(conj)
        for attr in ("in_GLdZ", "hyperbolic", "partially_hyperbolic", "ergodic",
                     "irreducible", "weakly_irreducible",
                     "very_weakly_irreducible"):
            assert getattr(rec, attr) == getattr(rec2, attr), attr
        assert abs(rec.rho_max - rec2.rho_max) < 1e-10


def test_bounded_total_irreducibility():
    n = cls.bounded_total_irreducibility(CAT, n_max=6)
    assert n == 6  # all powers of the cat map stay irreducible
    assert cls.bounded_total_irreducibility(BLOCK, n_max=4) is None
