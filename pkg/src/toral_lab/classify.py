"""Hypothesis checks for an integer matrix: hyperbolicity, ergodicity and the
irreducibility ladder, with exact lattice witnesses when very weak
irreducibility fails."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import mpmath

from . import exact_algebra as ea
from . import spectral

# a factor attains an extreme modulus iff it agrees at high precision
_EXTREME_TOL = 1e-20


@dataclass
class Classification:
    in_GLdZ: bool
    hyperbolic: bool
    partially_hyperbolic: bool
    ergodic: bool
    irreducible: bool
    weakly_irreducible: bool
    very_weakly_irreducible: bool
    rho_max: float
    rho_min: float
    witness: list | None
    totally_irreducible_up_to: int | None = None

    def to_json(self) -> dict:
        return asdict(self)


def _factor_moduli(fac: ea.IntPolynomial):
    """Sorted high-precision root moduli of a factor, unit roots snapped to 1."""
    roots, err = spectral._high_precision_roots(fac)
    n_circle = ea.unit_circle_root_count(fac)
    mods = sorted(m for _, m in roots)
    snapped = []
    flagged = 0
    for m in mods:
        if abs(m - 1) <= max(float(err) * 10, spectral.MOD_CERTIFY_TOL):
            snapped.append(mpmath.mpf(1))
            flagged += 1
        else:
            snapped.append(m)
    assert flagged == n_circle, "unit-circle certification mismatch"
    return snapped


def classify(M: ea.IntMatrix) -> Classification:
    """Full predicate record for an integer matrix.

    All predicates are derived from the exact factorization of the
    characteristic polynomial plus certified root moduli. When very weak
    irreducibility fails, the witness is the lexicographically first
    primitive integer kernel vector of p_k^{d_k}(M) for an offending factor.
    """
    p = ea.char_poly(M)
    factors = ea.factor_over_Q(p)
    per_factor = [(fac, mult, _factor_moduli(fac)) for fac, mult in factors]

    all_mods = sorted(m for _, _, mods in per_factor for m in mods)
    rho_max, rho_min = all_mods[-1], all_mods[0]
    n_unit = sum(1 for m in all_mods if m == 1)

    has_cyclotomic = any(ea.has_root_of_unity_factor(fac)[0] for fac, _, _ in per_factor)
    in_gl = M.in_GLdZ

    hyperbolic = n_unit == 0
    partially_hyperbolic = 0 < n_unit < len(all_mods)
    ergodic = in_gl and not has_cyclotomic
    irreducible = len(factors) == 1 and factors[0][1] == 1

    moduli_sets = [_modulus_set(mods) for _, _, mods in per_factor]
    weakly_irreducible = all(s == moduli_sets[0] for s in moduli_sets)

    witness = None
    very_weak = True
    for fac, mult, mods in per_factor:
        attains_max = abs(mods[-1] - rho_max) <= _EXTREME_TOL
        attains_min = abs(mods[0] - rho_min) <= _EXTREME_TOL
        if not (attains_max and attains_min):
            very_weak = False
            if witness is None:
                block = spectral._poly_of_matrix(fac, M)
                block = block.power(mult) if mult > 1 else block
                kernel = ea.integer_kernel(block.entries)
                witness = kernel[0]
            break

    if irreducible and not weakly_irreducible:
        raise AssertionError("irreducible must imply weakly irreducible")

    return Classification(
        in_GLdZ=in_gl,
        hyperbolic=hyperbolic,
        partially_hyperbolic=partially_hyperbolic,
        ergodic=ergodic,
        irreducible=irreducible,
        weakly_irreducible=weakly_irreducible,
        very_weakly_irreducible=very_weak,
        rho_max=float(rho_max),
        rho_min=float(rho_min),
        witness=witness,
        totally_irreducible_up_to=bounded_total_irreducibility(M) if in_gl else None,
    )


def _modulus_set(mods, tol=1e-20):
    """Distinct moduli of one factor, merged at high-precision tolerance."""
    out = []
    for m in mods:
        if not out or abs(m - out[-1]) > tol:
            out.append(m)
    return tuple(round(float(m), 15) for m in out)


def bounded_total_irreducibility(M: ea.IntMatrix, n_max: int = 12) -> int | None:
    """Largest n <= n_max with M^k irreducible for all k <= n, or None if M isn't.

    This is a bounded check only; it certifies nothing beyond n_max.
    """
    best = None
    for k in range(1, n_max + 1):
        p = ea.char_poly(M.power(k))
        factors = ea.factor_over_Q(p)
        if len(factors) == 1 and factors[0][1] == 1:
            best = k
        else:
            break
    return best
