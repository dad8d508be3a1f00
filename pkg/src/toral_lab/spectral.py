"""Eigenvalue moduli grouping and invariant-subspace bases for integer matrices.

Moduli are computed with mpmath at high precision and grouped with an explicit
certification policy; orthonormal bases for the stable/center/unstable spaces,
the Lyapunov blocks of the unstable space, and the fast sums come from ordered
real Schur decompositions. Rational invariant blocks are exact integer kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np
import scipy.linalg as sla

from . import exact_algebra as ea
from .errors import AmbiguousModuli, PrecisionExhausted

MOD_GROUP_TOL = 1e-9       # relative gap below which two moduli want the same group
MOD_CERTIFY_TOL = 1e-25    # high-precision agreement required to certify equality
ORTHO_TOL = 1e-12
INVARIANCE_TOL = 1e-9


def roots_with_moduli(p: ea.IntPolynomial, precision: float = 1e-20) -> list:
    """All roots of p with moduli and a posteriori error radii.

    Returns a list of (root, modulus, error) with root/modulus as floats of a
    high-precision computation. Raises PrecisionExhausted if the requested
    accuracy is unreachable at the hard cap.
    """
    prec = 128
    while prec <= 4096:
        with mpmath.workprec(prec):
            coeffs = [mpmath.mpf(c) for c in reversed(p.coeffs)]
            roots, err = mpmath.polyroots(coeffs, maxsteps=300, extraprec=prec, error=True)
        if float(err) <= precision:
            return [(complex(r), abs(complex(r)), float(err)) for r in roots]
        prec *= 2
    raise PrecisionExhausted(f"root error {err} above requested {precision}")


@dataclass
class ModulusGroup:
    modulus: float
    eigenvalues: list          # complex, repeated per algebraic multiplicity
    exactly_one: bool = False


@dataclass
class SpectralSplitting:
    matrix: ea.IntMatrix
    moduli_groups: list        # ModulusGroup sorted by modulus
    rho_max: float
    rho_min: float
    E_s: np.ndarray            # d x dim orthonormal bases (columns)
    E_c: np.ndarray
    E_u: np.ndarray
    lyapunov_blocks: list      # (rho_i, basis) for 1 < rho_1 < ... < rho_l
    fast_subspaces: list       # basis of E^{i,l} = E^i + ... + E^l
    rational_blocks: list      # (factor, multiplicity, integer kernel basis of p_k^{d_k}(M))
    residuals: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.matrix.d

    def unstable_moduli(self) -> list:
        return [g.modulus for g in self.moduli_groups if not g.exactly_one and g.modulus > 1]

    def to_json(self) -> dict:
        return {
            "moduli": [
                {"modulus": g.modulus, "multiplicity": len(g.eigenvalues),
                 "exactly_one": g.exactly_one}
                for g in self.moduli_groups
            ],
            "rho_max": self.rho_max,
            "rho_min": self.rho_min,
            "E_s": self.E_s.T.tolist(),
            "E_c": self.E_c.T.tolist(),
            "E_u": self.E_u.T.tolist(),
            "lyapunov_blocks": [
                {"rho": rho, "basis": b.T.tolist()} for rho, b in self.lyapunov_blocks
            ],
            "rational_blocks": [
                {"factor": f.to_json(), "multiplicity": m, "kernel": kb}
                for f, m, kb in self.rational_blocks
            ],
            "residuals": self.residuals,
        }


def _high_precision_roots(factor: ea.IntPolynomial):
    """Roots with mpf moduli and error radius at a fixed high working precision."""
    with mpmath.workprec(256):
        coeffs = [mpmath.mpf(c) for c in reversed(factor.coeffs)]
        roots, err = mpmath.polyroots(coeffs, maxsteps=300, extraprec=512, error=True)
        return [(mpmath.mpc(r), abs(mpmath.mpc(r))) for r in roots], mpmath.mpf(err)


def group_moduli(factors) -> list:
    """Group eigenvalue moduli across irreducible factors.

    Each entry carries eigenvalues repeated per multiplicity. Unit-circle
    membership is decided exactly per factor (cyclotomic or self-reciprocal
    Sturm count), never by numeric proximity alone. Raises AmbiguousModuli
    when two moduli fall inside the grouping tolerance without a certificate
    of equality.
    """
    entries = []  # (modulus mpf, eigenvalue complex, multiplicity, on_circle)
    for fac, mult in factors:
        roots, err = _high_precision_roots(fac)
        n_circle = ea.unit_circle_root_count(fac)
        flags = [abs(mod - 1) <= max(float(err) * 10, MOD_CERTIFY_TOL) for _, mod in roots]
        if sum(flags) != n_circle:
            raise AmbiguousModuli(
                f"factor {fac.coeffs}: {sum(flags)} roots look unit-modulus, "
                f"exact count is {n_circle}"
            )
        for (root, mod), on_circle in zip(roots, flags):
            entries.append((mpmath.mpf(1) if on_circle else mod,
                            complex(root), mult, on_circle))

    entries.sort(key=lambda e: e[0])
    groups = []
    for mod, eig, mult, on_circle in entries:
        if groups and abs(mod - groups[-1]["mods"][-1]) <= MOD_GROUP_TOL * max(float(mod), 1.0):
            g = groups[-1]
            spread = abs(mod - g["mods"][0])
            certified = spread <= MOD_CERTIFY_TOL or (on_circle and g["flags"][0])
            if not certified:
                raise AmbiguousModuli(
                    f"moduli {float(g['mods'][0])!r} and {float(mod)!r} within grouping "
                    "tolerance but not certified equal"
                )
            g["mods"].append(mod)
            g["eigs"].extend([eig] * mult)
            g["flags"].append(on_circle)
        else:
            groups.append({"mods": [mod], "eigs": [eig] * mult, "flags": [on_circle]})
    out = []
    for g in groups:
        if len(set(g["flags"])) > 1:
            raise AmbiguousModuli("group mixes certified unit and non-unit moduli")
        one = g["flags"][0]
        out.append(ModulusGroup(1.0 if one else float(g["mods"][0]), g["eigs"], one))
    return out


def _schur_basis(M: np.ndarray, selected: set, groups: list) -> np.ndarray:
    """Orthonormal basis of the invariant subspace for the selected modulus groups."""
    mods = np.array([g.modulus for g in groups])

    def pred(re, im):
        m = np.hypot(re, im)
        return int(np.argmin(np.abs(mods - m))) in selected

    _, Q, sdim = sla.schur(M, output="real", sort=pred)
    want = sum(len(groups[i].eigenvalues) for i in selected)
    if sdim != want:
        raise AmbiguousModuli(f"Schur selection found {sdim} eigenvalues, expected {want}")
    return Q[:, :sdim].copy()


def _subspace_residuals(M: np.ndarray, B: np.ndarray):
    if B.shape[1] == 0:
        return 0.0, 0.0
    ortho = np.linalg.norm(B.T @ B - np.eye(B.shape[1]))
    P = B @ B.T
    inv = np.linalg.norm(P @ M @ P - M @ P) / np.linalg.norm(M)
    return float(ortho), float(inv)


def build_splitting(M: ea.IntMatrix) -> SpectralSplitting:
    """Full spectral splitting record for an invertible integer matrix."""
    if M.det == 0:
        raise ValueError("matrix must be invertible")
    p = ea.char_poly(M)
    factors = ea.factor_over_Q(p)
    groups = group_moduli(factors)

    A = np.array(M.entries, dtype=float)
    mods = [g.modulus for g in groups]
    s_idx = {i for i, g in enumerate(groups) if not g.exactly_one and g.modulus < 1}
    c_idx = {i for i, g in enumerate(groups) if g.exactly_one}
    u_idx = {i for i, g in enumerate(groups) if not g.exactly_one and g.modulus > 1}

    E_s = _schur_basis(A, s_idx, groups) if s_idx else np.zeros((M.d, 0))
    E_c = _schur_basis(A, c_idx, groups) if c_idx else np.zeros((M.d, 0))
    E_u = _schur_basis(A, u_idx, groups) if u_idx else np.zeros((M.d, 0))

    unstable = sorted(u_idx, key=lambda i: mods[i])
    lyapunov_blocks = []
    fast_subspaces = []
    for pos, gi in enumerate(unstable):
        lyapunov_blocks.append((mods[gi], _schur_basis(A, {gi}, groups)))
        fast_subspaces.append(_schur_basis(A, set(unstable[pos:]), groups))

    rational_blocks = []
    for fac, mult in factors:
        pk = _poly_of_matrix(fac, M)
        block = pk.power(mult) if mult > 1 else pk
        rational_blocks.append((fac, mult, ea.integer_kernel(block.entries)))

    residuals = {}
    for name, B in (("E_s", E_s), ("E_c", E_c), ("E_u", E_u)):
        ortho, inv = _subspace_residuals(A, B)
        residuals[name] = {"orthonormality": ortho, "invariance": inv}
    for i, (rho, B) in enumerate(lyapunov_blocks, start=1):
        ortho, inv = _subspace_residuals(A, B)
        residuals[f"E^{i}"] = {"orthonormality": ortho, "invariance": inv}

    return SpectralSplitting(
        matrix=M,
        moduli_groups=groups,
        rho_max=max(mods),
        rho_min=min(mods),
        E_s=E_s,
        E_c=E_c,
        E_u=E_u,
        lyapunov_blocks=lyapunov_blocks,
        fast_subspaces=fast_subspaces,
        rational_blocks=rational_blocks,
        residuals=residuals,
    )


def _poly_of_matrix(p: ea.IntPolynomial, M: ea.IntMatrix) -> ea.IntMatrix:
    """Exact integer evaluation p(M) by Horner's scheme."""
    d = M.d
    acc = ea.IntMatrix([[0] * d for _ in range(d)])
    for a in reversed(p.coeffs):
        acc = acc @ M
        for i in range(d):
            acc.entries[i][i] += a
        acc = ea.IntMatrix(acc.entries)
    return acc


def oblique_projectors(splitting: SpectralSplitting) -> dict:
    """Spectral (oblique) projectors onto E^s, E^c, E^u along the complements."""
    blocks = [("s", splitting.E_s), ("c", splitting.E_c), ("u", splitting.E_u)]
    S = np.hstack([B for _, B in blocks])
    Sinv = np.linalg.inv(S)
    out = {}
    offset = 0
    for name, B in blocks:
        k = B.shape[1]
        out[name] = B @ Sinv[offset:offset + k, :]
        offset += k
    return out
