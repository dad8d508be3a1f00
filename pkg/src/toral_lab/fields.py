"""Uniform-grid and Fourier representations of periodic fields on the torus.

Grids are uniform with N points per axis (x_i = i/N). Fourier coefficients
follow the FFT layout with true coefficient normalization, i.e.
coeffs = fftn(values) / N^d, so coeffs[k] multiplies exp(2 pi i n.x) with
n = k mod-centered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GridField:
    """Real field sampled on the uniform N^d grid; trailing axis = vector components."""

    values: np.ndarray
    d: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim not in (self.d, self.d + 1):
            raise ValueError("values must have d or d+1 axes")

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == self.d + 1

    def sup_norm(self) -> float:
        if self.is_vector:
            return float(np.max(np.linalg.norm(self.values, axis=-1))) if self.values.size else 0.0
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


@dataclass
class FourierField:
    """Fourier coefficient table on the FFT frequency lattice."""

    coeffs: np.ndarray
    d: int

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.coeffs.ndim == self.d + 1

    def copy(self) -> "FourierField":
        return FourierField(self.coeffs.copy(), self.d)

    def frequencies(self) -> np.ndarray:
        """Integer frequency vectors, shape grid-shape + (d,)."""
        axes = [fft_freqs(self.N)] * self.d
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def norm_sq_lattice(self) -> np.ndarray:
        """||n||^2 per coefficient (exact integers as int64)."""
        n = self.frequencies()
        return np.sum(n * n, axis=-1)

    def scalar_power(self) -> np.ndarray:
        """|coefficient|^2, summed over vector components when present."""
        p = np.abs(self.coeffs) ** 2
        if self.is_vector:
            p = p.sum(axis=-1)
        return p

    def l2_norm(self) -> float:
        return float(np.sqrt(self.scalar_power().sum()))


def fft_freqs(N: int) -> np.ndarray:
    return np.fft.fftfreq(N, d=1.0 / N).astype(np.int64)


def grid_points(N: int, d: int) -> np.ndarray:
    """Flattened grid coordinates, shape (N^d, d), row-major."""
    axes = [np.arange(N) / N] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def analyze(field: GridField) -> FourierField:
    """Forward DFT with true-coefficient normalization."""
    axes = tuple(range(field.d))
    coeffs = np.fft.fftn(field.values, axes=axes) / field.N ** field.d
    return FourierField(coeffs, field.d)


def synthesize(ff: FourierField) -> GridField:
    """Inverse DFT back to grid samples (real part)."""
    axes = tuple(range(ff.d))
    values = np.fft.ifftn(ff.coeffs * ff.N ** ff.d, axes=axes)
    return GridField(values.real, ff.d)


def eval_at_points(ff: FourierField, points: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Trigonometric interpolation of a Fourier table at arbitrary points.

    Contracts one axis at a time against per-axis phase matrices, so the cost
    is O(M * N^d) with memory O(chunk * N^(d-1)). Returns real values
    (imaginary residue of a Hermitian table is discarded).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    M = points.shape[0]
    N = ff.N
    d = ff.d
    tail_shape = ff.coeffs.shape[d:]
    out = np.empty((M,) + tail_shape, dtype=float)
    freqs = fft_freqs(N)
    flat0 = np.ascontiguousarray(ff.coeffs.reshape(N, -1))
    for start in range(0, M, chunk):
        pts = points[start:start + chunk]
        m = pts.shape[0]
        T = np.exp(2j * np.pi * np.outer(pts[:, 0], freqs)) @ flat0
        T = T.reshape((m,) + ff.coeffs.shape[1:])
        for axis in range(1, d):
            E = np.exp(2j * np.pi * np.outer(pts[:, axis], freqs))
            T = np.matmul(E[:, None, :], T.reshape(m, N, -1))
            T = T.reshape((m,) + ff.coeffs.shape[axis + 1:])
        out[start:start + chunk] = T.reshape((m,) + tail_shape).real
    return out


def phase_matrices(N: int, points: np.ndarray) -> list:
    """Per-axis phase matrices for repeated interpolation at fixed points."""
    freqs = fft_freqs(N)
    return [np.exp(2j * np.pi * np.outer(points[:, a], freqs)) for a in range(points.shape[1])]


def eval_with_phases(coeffs: np.ndarray, phases: list, chunk: int = 1024) -> np.ndarray:
    """As eval_at_points but with precomputed phase matrices (fixed points).

    Points are processed in chunks: the first contraction leaves an
    (M, N^(d-1), ...) intermediate that gets prohibitively large otherwise.
    """
    M = phases[0].shape[0]
    N = phases[0].shape[1]
    d = len(phases)
    tail_shape = coeffs.shape[d:]
    out = np.empty((M,) + tail_shape, dtype=float)
    flat0 = np.ascontiguousarray(coeffs.reshape(N, -1))
    for start in range(0, M, chunk):
        m = min(chunk, M - start)
        # first axis: plain GEMM, later axes: batched per-point GEMV
        T = (phases[0][start:start + chunk] @ flat0)
        T = T.reshape((m,) + coeffs.shape[1:])
        for axis in range(1, d):
            Ec = phases[axis][start:start + chunk]
            T = np.matmul(Ec[:, None, :], T.reshape(m, N, -1))
            T = T.reshape((m,) + coeffs.shape[axis + 1:])
        out[start:start + chunk] = T.reshape((m,) + tail_shape).real
    return out


def torus_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance on T^d between point arrays (..., d)."""
    diff = a - b
    diff -= np.round(diff)
    return np.linalg.norm(diff, axis=-1)
