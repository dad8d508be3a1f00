"""One-dimensional jet calculus (value plus derivatives up to a fixed order),
Faa di Bruno composition, and growth tables for iterated contracting,
expanding, and two-rate leaf models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_CACHED_ORDER = 8


@dataclass
class Jet:
    """Value and derivatives 1..order of a scalar map at a base point.

    Arithmetic passes entries through unchanged, so exact types (Fraction)
    work as well as floats.
    """

    values: list   # [f(x), f'(x), ..., f^(order)(x)]

    @property
    def order(self) -> int:
        return len(self.values) - 1

    def derivative(self, m: int):
        return self.values[m]


@lru_cache(maxsize=None)
def _partitions(m: int) -> tuple:
    """Multiplicity vectors (k_1..k_m) with sum j*k_j = m, with coefficients
    m! / (prod k_j! (j!)^{k_j})."""
    out = []

    def rec(remaining, j, ks):
        if remaining == 0:
            ks = ks + [0] * (m - len(ks))
            coeff = math.factorial(m)
            for jj, k in enumerate(ks, start=1):
                coeff //= math.factorial(k) * math.factorial(jj) ** k
            out.append((tuple(ks), coeff))
            return
        if j > remaining:
            return
        for k in range(remaining // j + 1):
            rec(remaining - j * k, j + 1, ks + [k])

    rec(m, 1, [])
    return tuple(out)


# warm the cache for the supported orders
for _m in range(1, MAX_CACHED_ORDER + 1):
    _partitions(_m)


def compose(outer: Jet, inner: Jet) -> Jet:
    """Jet of outer o inner at inner's base point, via Faa di Bruno.

    outer must be the jet of the outer map at inner's value.
    """
    if outer.order != inner.order:
        raise ValueError("jet orders must match")
    m_max = inner.order
    vals = [outer.values[0]]
    for m in range(1, m_max + 1):
        total = 0
        for ks, coeff in _partitions(m):
            k_total = sum(ks)
            term = outer.values[k_total] * coeff
            for j, k in enumerate(ks, start=1):
                for _ in range(k):
                    term = term * inner.values[j]
            total = total + term
        vals.append(total)
    return Jet(vals)


def multiply(a: Jet, b: Jet) -> Jet:
    """Jet of the pointwise product, by the Leibniz rule."""
    if a.order != b.order:
        raise ValueError("jet orders must match")
    vals = []
    for m in range(a.order + 1):
        total = 0
        for i in range(m + 1):
            total = total + math.comb(m, i) * a.values[i] * b.values[m - i]
        vals.append(total)
    return Jet(vals)


class Periodic1D:
    """Leaf map g(x) = sigma x + eps * sin(2 pi x + phase) on R."""

    def __init__(self, sigma: float, eps: float, phase: float = 0.0):
        self.sigma = sigma
        self.eps = eps
        self.phase = phase

    def __call__(self, x: float) -> float:
        return self.sigma * x + self.eps * math.sin(2 * math.pi * x + self.phase)

    def derivative_sup(self) -> float:
        return abs(self.sigma) + abs(self.eps) * 2 * math.pi

    def jet(self, x: float, order: int) -> Jet:
        vals = [self(x), self.sigma + self.eps * 2 * math.pi
                * math.cos(2 * math.pi * x + self.phase)]
        for m in range(2, order + 1):
            w = (2 * math.pi) ** m
            arg = 2 * math.pi * x + self.phase
            cycle = [math.sin, math.cos, lambda t: -math.sin(t), lambda t: -math.cos(t)]
            vals.append(self.eps * w * cycle[m % 4](arg))
        return Jet(vals)


@dataclass
class GrowthTable:
    table: np.ndarray          # (m_max, n_max): sup_x |D^m g^n| over samples
    sigma: float               # declared base rate (sup |g'| for expanding)
    delta: float
    regime: str                # "contracting" or "expanding"
    constants: np.ndarray      # per m: min C with table[m,n] <= C * base(m)^n
    fitted_bases: np.ndarray   # per m: exp growth base fitted on the last half

    def bound_base(self, m: int) -> float:
        if self.regime == "contracting":
            return self.sigma + self.delta
        return (self.sigma + self.delta) ** m


def iterate_growth(g: Periodic1D, n_max: int, m_max: int, delta: float,
                   regime: str | None = None, n_samples: int = 512) -> GrowthTable:
    """Sup norms of D^m g^n over sampled base points, with growth diagnostics.

    Contracting regime checks ||D^m g^n|| <= C (sigma + delta)^n with a single
    reported C per m; expanding regime checks growth base <= (sigma + delta)^m
    with sigma = sup|g'|. The jets of g^n come from repeated composition along
    the orbit of each base point.
    """
    if m_max > MAX_CACHED_ORDER:
        raise ValueError(f"orders above {MAX_CACHED_ORDER} are not cached")
    sigma_sup = g.derivative_sup()
    if regime is None:
        regime = "contracting" if sigma_sup < 1 else "expanding"
    xs = np.arange(n_samples) / n_samples
    table = np.zeros((m_max, n_max))
    for x0 in xs:
        jet_n = g.jet(float(x0), m_max)
        x = g(float(x0))
        for n in range(n_max):
            if n > 0:
                jet_n = compose(g.jet(x, m_max), jet_n)
                x = g(x)
            for m in range(1, m_max + 1):
                table[m - 1, n] = max(table[m - 1, n], abs(jet_n.values[m]))

    base = sigma_sup + delta
    constants = np.zeros(m_max)
    fitted = np.zeros(m_max)
    ns = np.arange(1, n_max + 1)
    for m in range(1, m_max + 1):
        b = base if regime == "contracting" else base ** m
        constants[m - 1] = (table[m - 1] / b ** ns).max()
        row = table[m - 1]
        half = n_max // 2
        pos = row[half:] > 0
        if pos.sum() >= 2:
            slope = np.polyfit(ns[half:][pos], np.log(row[half:][pos]), 1)[0]
            fitted[m - 1] = math.exp(slope)
        else:
            fitted[m - 1] = 0.0
    return GrowthTable(table=table, sigma=sigma_sup, delta=delta, regime=regime,
                       constants=constants, fitted_bases=fitted)


class TwoRateModel:
    """Block-triangular leaf model (x, y) -> (sigma x + eps phi(x), lam(x) y).

    phi(x) = sin(2 pi x); lam(x) = lam0 + lam1 cos(2 pi x). The y-derivative
    of the n-th iterate is the product of lam along the x-orbit, and its
    x-jets come from chain/Leibniz calculus on that product.
    """

    def __init__(self, sigma: float, eps: float, lam0: float, lam1: float):
        self.base = Periodic1D(sigma, eps)
        self.lam0 = lam0
        self.lam1 = lam1

    def lam_sup(self) -> float:
        return abs(self.lam0) + abs(self.lam1)

    def lam_jet(self, x: float, order: int) -> Jet:
        arg = 2 * math.pi * x
        vals = [self.lam0 + self.lam1 * math.cos(arg)]
        cycle = [math.cos, lambda t: -math.sin(t), lambda t: -math.cos(t), math.sin]
        for m in range(1, order + 1):
            vals.append(self.lam1 * (2 * math.pi) ** m * cycle[m % 4](arg))
        return Jet(vals)


@dataclass
class TwoRateTable:
    table: np.ndarray          # (m_max+1, n_max): sup |D^m_x (d_y g^n)|
    lam_sup: float
    delta: float
    constants: np.ndarray      # per m (including m=0): min K with <= K (lam+delta)^n


def two_rate_growth(model: TwoRateModel, n_max: int, m_max: int, delta: float,
                    n_samples: int = 512) -> TwoRateTable:
    """Verify ||D^m_x (d_y g^n)|| <= K (lam_sup + delta)^n on the model class.

    d_y g^n(x, y) = prod_j lam(x_j) with x_j the base orbit; x-jets of the
    product are accumulated with the Leibniz rule on composed jets.
    """
    if m_max > MAX_CACHED_ORDER:
        raise ValueError(f"orders above {MAX_CACHED_ORDER} are not cached")
    xs = np.arange(n_samples) / n_samples
    table = np.zeros((m_max + 1, n_max))
    g = model.base
    for x0 in xs:
        orbit_jet = Jet([float(x0), 1.0] + [0.0] * (m_max - 1))  # jet of x -> x
        prod = None
        for n in range(n_max):
            lam_at = compose(model.lam_jet(orbit_jet.values[0], m_max), orbit_jet)
            prod = lam_at if prod is None else multiply(prod, lam_at)
            orbit_jet = compose(g.jet(orbit_jet.values[0], m_max), orbit_jet)
            for m in range(m_max + 1):
                table[m, n] = max(table[m, n], abs(prod.values[m]))

    base = model.lam_sup() + delta
    ns = np.arange(1, n_max + 1)
    constants = np.array([(table[m] / base ** ns).max() for m in range(m_max + 1)])
    return TwoRateTable(table=table, lam_sup=model.lam_sup(), delta=delta,
                        constants=constants)
