"""Maps f = L + R of the torus with R a finite trigonometric polynomial,
grid-sampled map variants, and the manufactured-conjugacy test construction."""

from __future__ import annotations

import numpy as np

from . import fields
from .errors import NoConvergence, NotContracting, NotDiffeo
from .exact_algebra import IntMatrix

INVERSE_CAP = 10_000
DEFAULT_TOL = 1e-12


class TrigPolyMap:
    """f(x) = L x + R(x) with R a real finite trigonometric polynomial.

    R is stored as a frequency table n -> complex vector; Hermitian symmetry
    is enforced on construction so R is real-valued. With L = identity and
    R = h0 this doubles as the manufactured conjugacy H0 = Id + h0.
    """

    def __init__(self, L: IntMatrix, R_coeffs: dict, enforce_zero_fixed_point: bool = False):
        self.L = L
        self.d = L.d
        table = {}
        for n, c in R_coeffs.items():
            n = tuple(int(v) for v in n)
            c = np.asarray(c, dtype=complex)
            neg = tuple(-v for v in n)
            if neg in table:
                if not np.allclose(table[neg], np.conj(c), atol=1e-12):
                    raise ValueError(f"Hermitian symmetry violated at {n}")
            table[n] = c
            table.setdefault(neg, np.conj(c))
        if enforce_zero_fixed_point:
            zero = tuple([0] * self.d)
            total = sum(table.values()) if table else np.zeros(self.d, dtype=complex)
            table[zero] = table.get(zero, np.zeros(self.d, dtype=complex)) - total
        self.R_coeffs = table
        self.enforce_zero_fixed_point = enforce_zero_fixed_point
        self._freqs = np.array(sorted(table.keys())) if table else np.zeros((0, self.d), int)
        self._coefs = (np.array([table[tuple(n)] for n in self._freqs])
                       if table else np.zeros((0, self.d), complex))

    # -- evaluation ---------------------------------------------------------

    def displacement(self, points: np.ndarray) -> np.ndarray:
        """R at arbitrary points, by direct summation over the support."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if len(self._freqs) == 0:
            return np.zeros((points.shape[0], self.d))
        phases = np.exp(2j * np.pi * points @ self._freqs.T)  # (M, K)
        return (phases @ self._coefs).real

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Lift of f; reduce mod 1 for the torus point."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        A = np.array(self.L.entries, dtype=float)
        return points @ A.T + self.displacement(points)

    def support_radius(self) -> int:
        if len(self._freqs) == 0:
            return 0
        return int(np.max(np.abs(self._freqs)))

    def lipschitz_bound(self) -> float:
        """Coefficient-sum bound on sup ||DR||."""
        if len(self._freqs) == 0:
            return 0.0
        norms = np.linalg.norm(self._coefs, axis=1) * np.linalg.norm(self._freqs, axis=1)
        return float(2 * np.pi * norms.sum())

    def inverse_contraction_factor(self) -> float:
        Linv = np.array(self.L.inverse_exact().entries, dtype=float)
        return float(np.linalg.norm(Linv, 2) * self.lipschitz_bound())

    def inverse_evaluate(self, points: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        """y with f(y) = x via the contraction y <- L^{-1}(x - R(y))."""
        if self.inverse_contraction_factor() >= 1:
            raise NotContracting(
                f"coefficient bound {self.inverse_contraction_factor():.3f} >= 1"
            )
        points = np.atleast_2d(np.asarray(points, dtype=float))
        Linv = np.array(self.L.inverse_exact().entries, dtype=float)
        y = points @ Linv.T
        for _ in range(INVERSE_CAP):
            y_next = (points - self.displacement(y)) @ Linv.T
            if np.max(np.abs(y_next - y)) < tol:
                return y_next
            y = y_next
        raise NoConvergence("inverse fixed point hit iteration cap")

    def to_json(self) -> dict:
        modes = []
        for n, c in sorted(self.R_coeffs.items()):
            modes.append({"n": list(n), "re": list(c.real), "im": list(c.imag)})
        return {"L": self.L.entries, "R": modes,
                "enforce_zero_fixed_point": self.enforce_zero_fixed_point}

    @classmethod
    def from_json(cls, data: dict) -> "TrigPolyMap":
        table = {tuple(m["n"]): np.array(m["re"]) + 1j * np.array(m["im"])
                 for m in data.get("R", [])}
        return cls(IntMatrix(data["L"]), table,
                   bool(data.get("enforce_zero_fixed_point", False)))


def sin_mode(n, direction, amplitude) -> dict:
    """Coefficient table of amplitude * sin(2 pi n.x) * direction."""
    v = np.asarray(direction, dtype=complex) * amplitude
    return {tuple(n): v / 2j, tuple(-k for k in n): -v / 2j}


def cos_mode(n, direction, amplitude) -> dict:
    v = np.asarray(direction, dtype=complex) * amplitude
    return {tuple(n): v / 2, tuple(-k for k in n): v / 2}


class ManufacturedMap:
    """f = H0^{-1} o L o H0 with H0 = Id + h0 known, evaluated exactly.

    H0 is a TrigPolyMap with identity linear part, so f and f^{-1} reduce to
    fixed-point inversions of H0; this keeps d=4 runs cheap (no grid
    interpolation in the map itself).
    """

    def __init__(self, L: IntMatrix, H0: TrigPolyMap, tol: float = DEFAULT_TOL):
        if H0.lipschitz_bound() >= 1:
            raise NotDiffeo(f"sup||Dh0|| bound {H0.lipschitz_bound():.3f} >= 1")
        self.L = L
        self.d = L.d
        self.H0 = H0
        self.tol = tol
        self._A = np.array(L.entries, dtype=float)
        self._Ainv = np.array(L.inverse_exact().entries, dtype=float)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        y = self.H0.evaluate(points) @ self._A.T
        return self.H0.inverse_evaluate(y, tol=self.tol)

    def inverse_evaluate(self, points: np.ndarray, tol: float | None = None) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        y = self.H0.evaluate(points) @ self._Ainv.T
        return self.H0.inverse_evaluate(y, tol=tol or self.tol)

    def displacement(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self.evaluate(points) - points @ self._A.T


class GridSampledMap:
    """Map carried as displacement samples on the uniform grid.

    Off-grid evaluation uses trigonometric interpolation of the displacement;
    an optional exact backend (the manufactured construction) can be attached
    and is preferred when present.
    """

    def __init__(self, L: IntMatrix, displacement_samples: np.ndarray, exact=None):
        self.L = L
        self.d = L.d
        N = displacement_samples.shape[0]
        if N & (N - 1):
            raise ValueError("grid resolution must be a power of two")
        self.grid = fields.GridField(displacement_samples, self.d)
        self.spectrum = fields.analyze(self.grid)
        self.exact = exact
        self._A = np.array(L.entries, dtype=float)

    @property
    def N(self) -> int:
        return self.grid.N

    def displacement(self, points: np.ndarray) -> np.ndarray:
        if self.exact is not None:
            return self.exact.displacement(points)
        return fields.eval_at_points(self.spectrum, points)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return points @ self._A.T + self.displacement(points)

    def lipschitz_bound(self) -> float:
        coefs = self.spectrum.coeffs.reshape(-1, self.d)
        freqs = self.spectrum.frequencies().reshape(-1, self.d)
        norms = np.linalg.norm(coefs, axis=1) * np.linalg.norm(freqs, axis=1)
        return float(2 * np.pi * norms.sum())

    def inverse_evaluate(self, points: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        if self.exact is not None:
            return self.exact.inverse_evaluate(points, tol=tol)
        Linv = np.array(self.L.inverse_exact().entries, dtype=float)
        if np.linalg.norm(Linv, 2) * self.lipschitz_bound() >= 1:
            raise NotContracting("coefficient bound >= 1 for grid-sampled inverse")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        y = points @ Linv.T
        for _ in range(INVERSE_CAP):
            y_next = (points - self.displacement(y)) @ Linv.T
            if np.max(np.abs(y_next - y)) < tol:
                return y_next
            y = y_next
        raise NoConvergence("inverse fixed point hit iteration cap")


def evaluate(f, x):
    """Single-point evaluation: (torus point, lift)."""
    lift = f.evaluate(np.asarray(x, dtype=float))[0]
    return lift % 1.0, lift


def orbit(f, x, k: int) -> np.ndarray:
    """k-fold composition of f (negative k uses the inverse)."""
    pt = np.atleast_2d(np.asarray(x, dtype=float))
    step = f.evaluate if k >= 0 else f.inverse_evaluate
    for _ in range(abs(k)):
        pt = step(pt)
    return pt[0]


def manufacture_conjugated_map(L: IntMatrix, H0: TrigPolyMap, N: int) -> GridSampledMap:
    """Grid samples of f = H0^{-1} o L o H0, with the exact evaluator attached."""
    exact = ManufacturedMap(L, H0)
    pts = fields.grid_points(N, L.d)
    disp = exact.displacement(pts).reshape((N,) * L.d + (L.d,))
    return GridSampledMap(L, disp, exact=exact)
