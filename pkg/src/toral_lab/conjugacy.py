"""Solvers for the projected cohomological equations L h - h o f = R.

The unstable/stable/block components are obtained by fixed-point iteration of
the contracting projected equations on grid samples, with compositions done
by trigonometric interpolation. The center component (partially hyperbolic
case) has no contraction and is summed as a series in Fourier space with a
per-coefficient geometric-convergence certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fields
from .errors import Diverging, GridTooCoarse, NoConvergence
from .spectral import SpectralSplitting

ITER_CAP = 10_000
RATIO_HISTORY = 8


@dataclass
class ComponentSolve:
    """One solved component, in ambient coordinates (values lie in its subspace)."""

    field: fields.GridField
    basis: np.ndarray            # d x k ambient basis of the subspace
    coords: np.ndarray           # grid-shaped k-component coordinate samples
    updates: list                # sup norms of successive updates
    contraction_ratio: float     # max of late update ratios
    iterations: int


@dataclass
class ConjugacySolution:
    h_u: fields.GridField | None
    h_s: fields.GridField | None
    h_c: fields.GridField | None
    residual_sup: float
    jacobian_sign_consistency: float
    iterations: dict = field(default_factory=dict)
    blocks: list = field(default_factory=list)


def _coordinate_frames(splitting: SpectralSplitting, lyapunov: bool = False):
    """Bases B and coordinate-extraction rows W for the invariant splitting.

    With S = [B_1 | ... | B_m] and W-rows from S^{-1}, the oblique component
    of v in block j is B_j (W_j v).
    """
    if lyapunov:
        blocks = [("s", splitting.E_s), ("c", splitting.E_c)]
        blocks += [(f"E^{i}", b) for i, (_, b) in enumerate(splitting.lyapunov_blocks, 1)]
    else:
        blocks = [("s", splitting.E_s), ("c", splitting.E_c), ("u", splitting.E_u)]
    S = np.hstack([b for _, b in blocks])
    Sinv = np.linalg.inv(S)
    frames = {}
    offset = 0
    for name, b in blocks:
        k = b.shape[1]
        frames[name] = (b, Sinv[offset:offset + k, :])
        offset += k
    return frames


def _restricted(L: np.ndarray, B: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Matrix of L restricted to span(B), in the B/W coordinate frame."""
    return W @ L @ B


def _grid_setup(f, N: int):
    pts = fields.grid_points(N, f.d)
    return pts


def _compose_coords(coords: np.ndarray, phases: list, N: int, d: int) -> np.ndarray:
    """coords o f at the fixed warped points, via trigonometric interpolation."""
    spec = np.fft.fftn(coords, axes=tuple(range(d))) / N ** d
    return fields.eval_with_phases(spec, phases)


def _resolution_check(f, N: int):
    """The grid must resolve the perturbation's trigonometric support."""
    radius = getattr(f, "support_radius", None)
    if radius is not None and radius() >= N // 2:
        raise GridTooCoarse(
            f"perturbation support radius {radius()} not resolved at N={N}"
        )


def _iterate_contraction(rhs_const, A_op, phases, N, d, tol, warped_desc):
    """Fixed point of c = A_op(c o warp) + rhs_const on the grid."""
    k = rhs_const.shape[-1]
    coords = np.zeros((N,) * d + (k,))
    updates = []
    for it in range(1, ITER_CAP + 1):
        comp = _compose_coords(coords, phases, N, d)
        new = comp.reshape(coords.shape) @ A_op.T + rhs_const
        delta = float(np.max(np.abs(new - coords)))
        coords = new
        updates.append(delta)
        if delta < tol:
            break
    else:
        raise NoConvergence(f"{warped_desc}: iteration cap reached, last update {delta:.2e}")
    tail = [u2 / u1 for u1, u2 in zip(updates, updates[1:]) if u1 > 10 * tol]
    ratio = max(tail[-RATIO_HISTORY:]) if tail else 0.0
    if ratio >= 1.0:
        raise NoConvergence(f"{warped_desc}: update ratio {ratio:.3f} not contracting")
    return coords, updates, ratio


def _solve_forward(f, splitting, B, W, N, tol):
    """Fixed point of h = L^{-1}(h o f) + L^{-1} R projected to span(B)."""
    _resolution_check(f, N)
    L = np.array(splitting.matrix.entries, dtype=float)
    A = _restricted(L, B, W)
    Ainv = np.linalg.inv(A)
    pts = _grid_setup(f, N)
    warped = f.evaluate(pts)
    phases = fields.phase_matrices(N, warped)
    R = f.displacement(pts)
    rhs = (R @ W.T @ Ainv.T).reshape((N,) * f.d + (B.shape[1],))
    coords, updates, ratio = _iterate_contraction(rhs, Ainv, phases, N, f.d, tol, "forward solve")
    values = coords @ B.T
    return ComponentSolve(fields.GridField(values, f.d), B, coords, updates, ratio, len(updates))


def solve_unstable(f, splitting: SpectralSplitting, N: int, tol: float = 1e-10) -> ComponentSolve:
    """Unstable component h^u from the contraction h = L_u^{-1}(h o f) + L_u^{-1} R_u."""
    frames = _coordinate_frames(splitting)
    B, W = frames["u"]
    if B.shape[1] == 0:
        raise ValueError("E^u is trivial")
    return _solve_forward(f, splitting, B, W, N, tol)


def solve_block(f, splitting: SpectralSplitting, i: int, N: int,
                tol: float = 1e-10) -> ComponentSolve:
    """Per-Lyapunov-block component h_i (i is 1-based over the unstable moduli)."""
    frames = _coordinate_frames(splitting, lyapunov=True)
    B, W = frames[f"E^{i}"]
    return _solve_forward(f, splitting, B, W, N, tol)


def solve_stable(f, splitting: SpectralSplitting, N: int, tol: float = 1e-10) -> ComponentSolve:
    """Stable component from h = L_s (h o f^{-1}) - R_s o f^{-1}."""
    frames = _coordinate_frames(splitting)
    B, W = frames["s"]
    if B.shape[1] == 0:
        raise ValueError("E^s is trivial")
    _resolution_check(f, N)
    L = np.array(splitting.matrix.entries, dtype=float)
    A = _restricted(L, B, W)
    pts = _grid_setup(f, N)
    pre = f.inverse_evaluate(pts, tol=tol * 1e-2 if tol < 1e-6 else 1e-12)
    phases = fields.phase_matrices(N, pre)
    R_pre = f.displacement(pre)
    rhs = (-R_pre @ W.T).reshape((N,) * f.d + (B.shape[1],))
    coords, updates, ratio = _iterate_contraction(rhs, A, phases, N, f.d, tol, "stable solve")
    values = coords @ B.T
    return ComponentSolve(fields.GridField(values, f.d), B, coords, updates, ratio, len(updates))


@dataclass
class CenterSolve:
    field: fields.GridField
    basis: np.ndarray
    coeffs: np.ndarray           # accumulated coefficients on the N-lattice (center coords)
    converged_mask: np.ndarray   # per-frequency certificate on the N-lattice
    increment_ratios: np.ndarray # fitted geometric ratio per kept frequency (nan if unfit)
    retained_mask: np.ndarray    # kept-ball frequencies whose increments ever rose above floor
    terms_used: int
    ball_radius: int


def solve_center(f, splitting: SpectralSplitting, N: int, K_max: int = 40,
                 tol: float = 1e-8, retain_floor: float = 1e-13,
                 ball_radius: int | None = None, oversample: int = 2) -> CenterSolve:
    """Center component as the Fourier-space series -sum_k L_c^{k-1} (R_c o f^{-k}).

    No contraction is available here, so convergence is certified coefficient
    by coefficient: a frequency counts as converged when its increments decay
    geometrically (fitted ratio < 1) to below tol and never resurge. Raises
    Diverging when low-frequency increments grow with k.

    Each term is sampled on an oversampled grid (M = oversample * N) and only
    coefficients in the kept ball ||nu||_inf <= ball_radius are accumulated.
    The pulled-back spectrum of term k grows like rho_min^{-k}, so a plain
    N-grid FFT aliases O(eps) mass onto every low frequency and destroys
    per-coefficient convergence; with oversampling the early (active) terms
    are sub-Nyquist and exact, and by the time aliasing onto the kept ball is
    possible the true increments there have decayed super-geometrically. Late
    aliasing hits are caught by the resurgence check and masked unconverged.
    """
    frames = _coordinate_frames(splitting)
    B, W = frames["c"]
    if B.shape[1] == 0:
        raise ValueError("E^c is trivial")
    L = np.array(splitting.matrix.entries, dtype=float)
    A = _restricted(L, B, W)
    d, k = f.d, B.shape[1]
    if ball_radius is None:
        ball_radius = max(N // 4, 1)
    if ball_radius > N // 2 - 1:
        raise ValueError("kept ball must fit strictly inside the N-lattice")
    M = oversample * N
    pts = fields.grid_points(M, d)

    ball_freqs = np.arange(-ball_radius, ball_radius + 1)
    idx_M = np.ix_(*([ball_freqs % M] * d))
    idx_N = np.ix_(*([ball_freqs % N] * d))
    ball_shape = (2 * ball_radius + 1,) * d

    increments = []
    sups = []
    y = pts
    Lc_pow = np.eye(k)
    inv_tol = min(tol * 1e-3, 1e-12)
    run_min, noisy_steps = np.inf, 0
    for step in range(K_max):
        # reduce mod 1: keeps lifts small so the inverse fixed point stays
        # resolvable in double precision over long backward orbits
        y = f.inverse_evaluate(y % 1.0, tol=inv_tol) % 1.0
        term = -(f.displacement(y) @ W.T @ Lc_pow.T).reshape((M,) * d + (k,))
        spec = np.fft.fftn(term, axes=tuple(range(d))) / M ** d
        inc = spec[idx_M]
        increments.append(inc)
        sup = float(np.linalg.norm(inc, axis=-1).max())
        sups.append(sup)
        Lc_pow = A @ Lc_pow
        run_min = min(run_min, sup)
        if sup < 1e-15:
            break
        # backward orbits amplify roundoff like rho_min^{-step}; once the
        # sup-increment turns around after reaching tol, later terms are noise
        noisy_steps = noisy_steps + 1 if sup > 10 * run_min else 0
        if run_min < tol and noisy_steps >= 3:
            break

    stop = int(np.argmin(sups)) + 1 if sups[-1] > 10 * min(sups) else len(sups)
    acc = np.sum(increments[:stop], axis=0)
    history = np.stack([np.linalg.norm(inc, axis=-1) for inc in increments[:stop]])
    terms_used = stop

    ratios = _fit_decay_ratios(history)
    resurgent = _resurgence_mask(history, tol)
    peak = history.max(axis=0)
    retained = peak > retain_floor
    tail_quiet = history[-3:].max(axis=0) <= tol
    converged = (~retained) | (
        np.where(np.isnan(ratios), False, ratios < 1.0) & tail_quiet & ~resurgent
    )

    low = np.zeros(ball_shape, dtype=bool)
    low[np.ix_(*([np.array([-1, 0, 1]) + ball_radius] * d))] = True
    grow = retained & low & (history[-3:].max(axis=0) > 100 * tol) \
        & np.where(np.isnan(ratios), False, ratios > 1.05)
    if grow.any():
        raise Diverging(f"{int(grow.sum())} low-frequency increments growing")

    coeffs_N = np.zeros((N,) * d + (k,), dtype=complex)
    conv_N = np.zeros((N,) * d, dtype=bool)
    coeffs_N[idx_N] = acc
    conv_N[idx_N] = converged
    masked = np.where(conv_N[..., None], coeffs_N, 0.0)
    values = np.fft.ifftn(masked * N ** d, axes=tuple(range(d))).real @ B.T
    return CenterSolve(fields.GridField(values, d), B, coeffs_N, conv_N,
                       ratios, retained, terms_used, ball_radius)


def _fit_decay_ratios(history: np.ndarray) -> np.ndarray:
    """Per-frequency geometric ratio of the increments after their peak.

    The pulled-back spectrum visits each frequency over a few consecutive
    steps, so increment sequences are spiky rather than monotone; the
    certificate of convergence is the decay flank after the (last) peak. The
    fit window runs from the argmax step over up to RATIO_HISTORY steps; nan
    where fewer than two positive increments are available.
    """
    K = history.shape[0]
    shape = history.shape[1:]
    peak = history.argmax(axis=0)
    steps = np.arange(K).reshape((K,) + (1,) * len(shape))
    window = (steps >= peak) & (steps < peak + RATIO_HISTORY)
    usable = window & (history > 0)
    n_pts = usable.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logm = np.where(usable, np.log(np.where(history > 0, history, 1.0)), 0.0)
        t = np.where(usable, steps, 0.0)
        sum_t = t.sum(axis=0)
        sum_y = logm.sum(axis=0)
        sum_tt = (t * t).sum(axis=0)
        sum_ty = (t * logm).sum(axis=0)
        denom = n_pts * sum_tt - sum_t ** 2
        slope = (n_pts * sum_ty - sum_t * sum_y) / denom
    return np.where((n_pts >= 2) & (denom != 0), np.exp(slope), np.nan)


def _resurgence_mask(history: np.ndarray, tol: float) -> np.ndarray:
    """Frequencies whose increments jump back above tol after going quiet.

    Three consecutive increments below tol/10 mark a frequency quiet; any
    later increment above tol is treated as aliasing pollution of the
    accumulated coefficient, not genuine series activity.
    """
    K = history.shape[0]
    quiet_since = np.zeros(history.shape[1:], dtype=bool)
    run = np.zeros(history.shape[1:], dtype=np.int32)
    resurgent = np.zeros(history.shape[1:], dtype=bool)
    for step in range(K):
        inc = history[step]
        resurgent |= quiet_since & (inc > tol)
        run = np.where(inc < tol / 10, run + 1, 0)
        quiet_since |= run >= 3
    return resurgent


def assemble_and_validate(f, splitting: SpectralSplitting,
                          h_s: fields.GridField | None = None,
                          h_c: fields.GridField | None = None,
                          h_u: fields.GridField | None = None) -> ConjugacySolution:
    """Assemble H = Id + h and report the conjugacy residual diagnostics."""
    parts = [p for p in (h_s, h_c, h_u) if p is not None]
    if not parts:
        raise ValueError("at least one component required")
    N, d = parts[0].N, parts[0].d
    h = np.zeros_like(parts[0].values)
    for p in parts:
        if p.values.shape != h.shape:
            raise ValueError("component grids incompatible")
        h = h + p.values

    L = np.array(splitting.matrix.entries, dtype=float)
    pts = fields.grid_points(N, d)
    fx = f.evaluate(pts)
    spec = np.fft.fftn(h, axes=tuple(range(d))) / N ** d
    h_at_fx = fields.eval_at_points(fields.FourierField(spec, d), fx)
    h_flat = h.reshape(-1, d)
    lhs = pts @ L.T + h_flat @ L.T
    rhs = fx + h_at_fx
    residual = float(fields.torus_distance(lhs, rhs).max())

    sign_frac = _jacobian_sign_consistency(h, N, d)
    return ConjugacySolution(h_u=h_u, h_s=h_s, h_c=h_c, residual_sup=residual,
                             jacobian_sign_consistency=sign_frac)


def _jacobian_sign_consistency(h: np.ndarray, N: int, d: int) -> float:
    """Fraction of grid points whose det(I + Dh) shares the majority sign."""
    spec = np.fft.fftn(h, axes=tuple(range(d)))
    freqs = fields.fft_freqs(N)
    jac = np.empty((N,) * d + (d, d))
    for a in range(d):
        shape = [1] * d
        shape[a] = N
        deriv = np.fft.ifftn(spec * (2j * np.pi * freqs.reshape(shape))[..., None],
                             axes=tuple(range(d))).real
        jac[..., :, a] = deriv
    jac += np.eye(d)
    dets = np.linalg.det(jac)
    pos = float(np.mean(dets > 0))
    return max(pos, 1.0 - pos)
