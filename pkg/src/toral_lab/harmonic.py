"""Fourier-side toolkit: fractional Sobolev norms, truncation smoothing with
certified estimates, directional weighted norms and fractional derivatives,
the dominant-direction theta decomposition, lattice Diophantine scans, and
decay/regularity diagnostics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import fields
from .errors import OrthogonalMode

ORTHO_MODE_TOL = 1e-14

analyze = fields.analyze
synthesize = fields.synthesize


def sobolev_norm(ff: fields.FourierField, beta: float) -> float:
    """(sum (1+||n||^2)^beta |w_n|^2)^{1/2}; beta=0 is the L2 norm."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    w = (1.0 + ff.norm_sq_lattice().astype(float)) ** beta
    return float(np.sqrt((w * ff.scalar_power()).sum()))


@dataclass
class TruncationReport:
    N: int
    beta: float
    low_pass_error: float      # ||w - w_N||_{L2}
    low_pass_bound: float      # N^{-beta} ||w||_{H^beta}
    norm_growth: float         # ||w_N||_{H^beta}
    norm_growth_bound: float   # 2^{beta/2} N^beta ||w||_{L2}

    @property
    def both_hold(self) -> bool:
        return (self.low_pass_error <= self.low_pass_bound * (1 + 1e-12)
                and self.norm_growth <= self.norm_growth_bound * (1 + 1e-12))


def truncate(ff: fields.FourierField, N: int, beta: float):
    """Zero all coefficients with ||n|| > N and report the two estimates.

    The ball test ||n||^2 <= N^2 is exact in integers. Both inequalities are
    theorems; the report carries both sides so callers can assert slack.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    keep = ff.norm_sq_lattice() <= N * N
    coeffs = np.where(keep[..., None] if ff.is_vector else keep, ff.coeffs, 0.0)
    out = fields.FourierField(coeffs, ff.d)

    diff = fields.FourierField(ff.coeffs - coeffs, ff.d)
    report = TruncationReport(
        N=N,
        beta=beta,
        low_pass_error=diff.l2_norm(),
        low_pass_bound=N ** (-beta) * sobolev_norm(ff, beta),
        norm_growth=sobolev_norm(out, beta),
        norm_growth_bound=2 ** (beta / 2) * N ** beta * ff.l2_norm(),
    )
    return out, report


def directional_weighted_norm(ff: fields.FourierField, m, v, exponent: float) -> float:
    """sum_n |w_n|^2 |n^m|^2 |n.v|^exponent with n^m = prod n_k^{m_k}.

    exponent is the already-halved fractional power applied to |n.v|^2, i.e.
    pass 2/2^k for the k-th dissipation level. Modes with n.v = 0 contribute
    with weight |0|^0 = 1 when exponent = 0.
    """
    m = np.asarray(m, dtype=int)
    v = np.asarray(v, dtype=float)
    n = ff.frequencies().astype(float)
    poly = np.ones(n.shape[:-1])
    for axis in range(ff.d):
        if m[axis]:
            poly = poly * n[..., axis] ** m[axis]
    dots = np.abs(n @ v)
    if exponent == 0:
        frac = np.ones_like(dots)
    else:
        with np.errstate(divide="ignore"):
            frac = np.where(dots > 0, dots ** exponent, 0.0)
    return float((ff.scalar_power() * poly ** 2 * frac).sum())


def fractional_derivative(ff: fields.FourierField, v, beta: float) -> fields.FourierField:
    """Coefficient-wise multiplication by |n.v|^beta.

    Convention |0|^0 = 1: beta = 0 is the identity on every mode; beta > 0
    sends modes with n.v = 0 to zero.
    """
    v = np.asarray(v, dtype=float)
    dots = np.abs(ff.frequencies().astype(float) @ v)
    if beta == 0:
        return ff.copy()
    with np.errstate(divide="ignore"):
        w = np.where(dots > 0, dots ** beta, 0.0)
    coeffs = ff.coeffs * (w[..., None] if ff.is_vector else w)
    return fields.FourierField(coeffs, ff.d)


@dataclass
class ThetaDecomposition:
    mean: complex                  # psi-hat at 0
    thetas: list                   # FourierField per direction
    iota: np.ndarray               # assigned direction index per frequency (-1 for n=0)
    k: int
    theta_norms: list              # ||theta_j||_{H^{beta/2}} for the report beta
    psi_norm: float                # ||psi||_{H^beta}
    beta: float


def theta_decomposition(psi: fields.FourierField, V: np.ndarray, k: int,
                        beta: float = 0.5) -> ThetaDecomposition:
    """Split psi - mean into theta_j with dominant direction v_j.

    iota(n) is the smallest j maximizing |n.v_j|; theta_j takes the modes with
    iota(n) = j, divided by |n.v_j|^{1/2^k}, so that applying the fractional
    derivative of order 1/2^k in direction v_j and summing reconstructs
    psi - mean exactly. Raises OrthogonalMode when a supported mode is
    orthogonal to every v_j (the division is impossible there).
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != psi.d:
        raise ValueError("V must be d x r with columns v_j")
    r = V.shape[1]
    n = psi.frequencies().astype(float)
    dots = np.abs(np.tensordot(n, V, axes=(-1, 0)))  # grid-shape + (r,)
    best = dots.max(axis=-1)
    # smallest index attaining the max (exact float comparison; ties go low)
    iota = np.argmax(dots == best[..., None], axis=-1)

    zero_mode = psi.norm_sq_lattice() == 0
    supported = (psi.scalar_power() > 0) & ~zero_mode
    if (supported & (best <= ORTHO_MODE_TOL)).any():
        raise OrthogonalMode("supported mode orthogonal to every scan direction")
    iota = np.where(zero_mode, -1, iota)

    alpha = 1.0 / 2 ** k
    thetas = []
    theta_norms = []
    for j in range(r):
        mask = (iota == j) & supported
        with np.errstate(divide="ignore"):
            scale = np.where(mask, 1.0 / np.where(mask, dots[..., j], 1.0) ** alpha, 0.0)
        coeffs = psi.coeffs * (scale[..., None] if psi.is_vector else scale)
        tj = fields.FourierField(coeffs, psi.d)
        thetas.append(tj)
        theta_norms.append(sobolev_norm(tj, beta / 2))

    mean = psi.coeffs[(0,) * psi.d]
    return ThetaDecomposition(mean=mean, thetas=thetas, iota=iota, k=k,
                              theta_norms=theta_norms,
                              psi_norm=sobolev_norm(psi, beta), beta=beta)


def theta_reconstruct(dec: ThetaDecomposition, V: np.ndarray) -> fields.FourierField:
    """psi-hat_0 + sum_j |d_{v_j}|^{1/2^k} theta_j, coefficient-wise."""
    V = np.asarray(V, dtype=float)
    alpha = 1.0 / 2 ** dec.k
    out = None
    for j, tj in enumerate(dec.thetas):
        term = fractional_derivative(tj, V[:, j], alpha)
        out = term.coeffs if out is None else out + term.coeffs
    out = out.copy()
    d = dec.thetas[0].d
    out[(0,) * d] += dec.mean
    return fields.FourierField(out, d)


@dataclass
class DiophantineScan:
    basis: np.ndarray
    radius: float
    exponent: int
    empirical_K: float
    witness: list | None
    katznelson_K: float
    katznelson_witness: list | None
    points_scanned: int = 0


ZERO_SNAP = 1e-10


def diophantine_scan(V: np.ndarray, radius: float, exponent: int | None = None,
                     trace_csv: str | None = None, chunk: int = 512) -> DiophantineScan:
    """Minimize ||n||^d sum_i |n.v_i| over 0 != n in Z^d, ||n|| <= radius.

    Also returns the Katznelson variant ||n||^d dist(n, V-perp) = ||n||^d ||P_V n||,
    which is basis-independent. Enumeration covers the half-space with first
    nonzero coordinate positive (values are even in n); witnesses are the
    minimizers that come first by (||n||_inf shell, lexicographic) order.
    Directional sums below ZERO_SNAP are snapped to exact zero.
    """
    V = np.asarray(V, dtype=float)
    d, r = V.shape
    if exponent is None:
        exponent = d
    P = V @ np.linalg.pinv(V)  # orthogonal projector onto span(V)
    R = int(np.floor(radius))
    rows = [] if trace_csv else None

    best = (np.inf, None)       # (value, key)
    best_katz = (np.inf, None)

    axes = [np.arange(-R, R + 1)] * (d - 1)
    rest = (np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d - 1)
            if d > 1 else np.zeros((1, 0), dtype=int))
    points_scanned = 0
    for n1 in range(0, R + 1):
        block = np.concatenate(
            [np.full((rest.shape[0], 1), n1, dtype=int), rest], axis=1)
        if n1 == 0:
            block = block[_first_nonzero_positive(block[:, 1:])]
        nsq = (block.astype(np.int64) ** 2).sum(axis=1)
        keep = (nsq > 0) & (nsq <= radius * radius)
        block, nsq = block[keep], nsq[keep]
        if block.size == 0:
            continue
        points_scanned += len(block)
        norm = np.sqrt(nsq.astype(float))
        sums = np.abs(block @ V).sum(axis=1)
        sums = np.where(sums < ZERO_SNAP, 0.0, sums)
        vals = norm ** exponent * sums
        dist = np.linalg.norm(block @ P.T, axis=1)
        dist = np.where(dist < ZERO_SNAP, 0.0, dist)
        kvals = norm ** exponent * dist
        best = _argmin_update(best, block, vals)
        best_katz = _argmin_update(best_katz, block, kvals)
        if rows is not None:
            for n, nn, s, v in zip(block.tolist(), norm, sums, vals):
                rows.append((n, float(nn), float(s), float(v)))

    if trace_csv:
        with open(trace_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "norm", "directional_sum", "weighted_value"])
            for n, nn, s, v in rows:
                w.writerow([" ".join(map(str, n)), nn, s, v])

    return DiophantineScan(
        basis=V, radius=radius, exponent=exponent,
        empirical_K=float(best[0]) if best[1] is not None else np.inf,
        witness=best[1],
        katznelson_K=float(best_katz[0]) if best_katz[1] is not None else np.inf,
        katznelson_witness=best_katz[1],
        points_scanned=points_scanned,
    )


def _first_nonzero_positive(tail: np.ndarray) -> np.ndarray:
    """Mask selecting rows whose first nonzero entry is positive (or all zero)."""
    if tail.shape[1] == 0:
        return np.ones(tail.shape[0], dtype=bool)
    nz = tail != 0
    any_nz = nz.any(axis=1)
    first = np.argmax(nz, axis=1)
    lead = tail[np.arange(tail.shape[0]), first]
    return ~any_nz | (lead > 0)


def _shell_lex_key(n) -> tuple:
    return (int(np.max(np.abs(n))), tuple(int(v) for v in n))


def _argmin_update(best, block, vals):
    lo = vals.min()
    if lo > best[0]:
        return best
    cand = block[vals == lo]
    key = min((_shell_lex_key(n) for n in cand))
    n_star = list(key[1])
    if lo < best[0] or (best[1] is not None and key < _shell_lex_key(best[1])):
        return (lo, n_star)
    return best


@dataclass
class L2UpgradeCheck:
    verdict: str                # "consistent-with-L2" or "growing"
    radii: np.ndarray
    partial_sums: np.ndarray    # sqrt of the monotone sums
    bound: float                # K * ||w||_{H^beta}
    fitted_exponent: float


GROWTH_EXPONENT_THRESHOLD = 0.15


def l2_upgrade_check(ff: fields.FourierField, m, beta: float, K: float,
                     margin: float = 1.05, floor: float = 0.0) -> L2UpgradeCheck:
    """Partial sums of ((2 pi)^{|m|} |n^m| |w_n|)^2 over growing balls.

    Bounded partial sums are the numerical signature that the weighted field
    stays in L2; "growing" is declared when a power-law fit of the square-root
    sums against the radius (last half of the data) has exponent above
    GROWTH_EXPONENT_THRESHOLD and the final sum exceeds the supplied bound.

    For fields produced by an iterative solver, pass the solver tolerance as
    floor: coefficients below it are numerically indistinguishable from zero
    and the high-order weights |n^m| would otherwise amplify pure noise into
    a spurious growth verdict.
    """
    m = np.asarray(m, dtype=int)
    n = ff.frequencies().astype(float)
    poly = np.ones(n.shape[:-1])
    for axis in range(ff.d):
        if m[axis]:
            poly = poly * n[..., axis] ** m[axis]
    power = ff.scalar_power()
    if floor > 0:
        power = np.where(power < floor * floor, 0.0, power)
    weight = ((2 * np.pi) ** int(m.sum()) * np.abs(poly)) ** 2 * power
    nsq = ff.norm_sq_lattice()

    r_max = int(np.floor(np.sqrt(nsq.max())))
    radii = np.arange(1, max(r_max, 1) + 1)
    sums = np.array([weight[nsq <= r * r].sum() for r in radii])
    roots = np.sqrt(sums)
    bound = K * sobolev_norm(ff, beta)

    half = radii[len(radii) // 2:]
    vals = roots[len(radii) // 2:]
    pos = vals > 0
    if pos.sum() >= 2:
        slope = np.polyfit(np.log(half[pos]), np.log(vals[pos]), 1)[0]
    else:
        slope = 0.0
    growing = slope > GROWTH_EXPONENT_THRESHOLD and roots[-1] > bound * margin
    return L2UpgradeCheck(
        verdict="growing" if growing else "consistent-with-L2",
        radii=radii, partial_sums=roots, bound=bound,
        fitted_exponent=float(slope),
    )


@dataclass
class RegularityReport:
    model: str                  # "exponential" or "power"
    exp_rate: float             # b in max|h_n| ~ exp(-b ||n||)
    power_exponent: float       # p in max|h_n| ~ ||n||^{-p}
    exp_residual: float
    power_residual: float
    floor: float
    shells: np.ndarray
    shell_max: np.ndarray
    fit_csv: list = field(default_factory=list)


def regularity_report(h: fields.GridField) -> RegularityReport:
    """Classify coefficient decay of a solved field: exponential vs power law.

    Shell maxima of |h_n| over Euclidean-radius shells are fitted against
    ||n|| (exponential model) and log||n|| (power model) by least squares on
    the last half of the shells above the noise floor; the model with smaller
    mean squared log-residual wins. The floor is the median coefficient
    magnitude in the outermost quarter of shells.
    """
    ff = fields.analyze(h)
    mags = np.abs(ff.coeffs)
    if ff.is_vector:
        mags = np.linalg.norm(mags, axis=-1)
    nsq = ff.norm_sq_lattice()
    r = np.sqrt(nsq.astype(float))
    r_max = int(np.floor(r.max()))
    shells = np.arange(1, r_max + 1)
    shell_max = np.array([
        mags[(r > s - 1) & (r <= s)].max() if ((r > s - 1) & (r <= s)).any() else 0.0
        for s in shells
    ])

    outer = shell_max[3 * len(shells) // 4:]
    floor = float(np.median(outer[outer > 0])) if (outer > 0).any() else 0.0
    live = shell_max > max(10 * floor, 1e-300)
    idx = np.nonzero(live)[0]
    if len(idx) < 4:
        # nothing above floor beyond a few shells: finite support / flat field
        return RegularityReport("exponential", np.inf, np.inf, 0.0, np.inf,
                                floor, shells, shell_max)
    idx = idx[len(idx) // 2:]   # last half of usable shells
    x = shells[idx].astype(float)
    y = np.log(shell_max[idx])

    exp_fit = np.polyfit(x, y, 1)
    pow_fit = np.polyfit(np.log(x), y, 1)
    exp_res = float(np.mean((np.polyval(exp_fit, x) - y) ** 2))
    pow_res = float(np.mean((np.polyval(pow_fit, np.log(x)) - y) ** 2))
    model = "exponential" if exp_res <= pow_res else "power"
    return RegularityReport(
        model=model,
        exp_rate=float(-exp_fit[0]),
        power_exponent=float(-pow_fit[0]),
        exp_residual=exp_res,
        power_residual=pow_res,
        floor=floor,
        shells=shells,
        shell_max=shell_max,
        fit_csv=[(int(s), float(mx)) for s, mx in zip(shells, shell_max)],
    )
