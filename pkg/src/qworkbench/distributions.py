"""Porter-Thomas comparisons, anticoncentration, entropies and the l_{2/3} quasinorm machinery.

Logarithms are base 2 unless a name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .quantum_core import as_probs


@dataclass
class SampleSet:
    n_outcomes: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int64).reshape(-1)
        if self.samples.size and (self.samples.min() < 0 or self.samples.max() >= self.n_outcomes):
            raise ConfigError("sample index outside the outcome space")

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.samples, minlength=self.n_outcomes)

    def __len__(self):
        return self.samples.size


def as_samples(samples, n_outcomes: int) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.samples
    return SampleSet(n_outcomes, samples).samples


# ---------------------------------------------------------------- Porter-Thomas


def porter_thomas_pdf(p, D: int):
    """Density of |<x|U|0>|^2 for Haar U in dimension D: (D-1)(1-p)^(D-2)."""
    p = np.asarray(p, dtype=float)
    return (D - 1) * np.power(np.clip(1 - p, 0, None), D - 2)


def porter_thomas_pdf_asymptotic(p, D: int):
    """Large-D limit D exp(-D p)."""
    return D * np.exp(-D * np.asarray(p, dtype=float))


def pt_bin_edges(m: int, D: int) -> np.ndarray:
    """Edges p_0 = 0 < ... < p_m = inf of m bins with equal weight under D exp(-D p)."""
    if m < 1:
        raise ConfigError("need at least one bin")
    i = np.arange(m + 1)
    with np.errstate(divide="ignore"):
        edges = -np.log1p(-i / m) / D
    edges[-1] = np.inf
    return edges


def pt_bin_index(values, m: int, D: int) -> np.ndarray:
    edges = pt_bin_edges(m, D)
    return np.clip(np.searchsorted(edges, np.asarray(values, dtype=float), side="right") - 1, 0, m - 1)


def porter_thomas_fixture(D: int) -> np.ndarray:
    """Deterministic vector whose entries are the PT quantiles at (i + 1/2)/D, normalized."""
    q = (np.arange(D) + 0.5) / D
    p = -np.log1p(-q) / D
    return np.sort(p / p.sum())[::-1].copy()


def default_bin_count(n_qubits: int) -> int:
    """min(floor(2^n / 5), 100), the bin count used for PT comparisons."""
    return max(2, min(2**n_qubits // 5, 100))


# ---------------------------------------------------------------- basic statistics


def anticonc_fraction(probs, alpha: float = 1.0) -> float:
    """Fraction of outcomes with probability at least alpha / (number of outcomes)."""
    p = as_probs(probs)
    if alpha <= 0:
        raise ConfigError("alpha must be positive")
    thr = alpha / p.size
    return float(np.mean(p >= thr * (1 - 1e-12)))


def tv_distance(p, q) -> float:
    p, q = as_probs(p), as_probs(q)
    if p.shape != q.shape:
        raise ConfigError("distributions live on different outcome spaces")
    return 0.5 * float(np.abs(p - q).sum())


def tv_to_porter_thomas(probs, m_bins: int) -> float:
    """Half the l1 distance between the binned probability multiset and the flat 1/m profile."""
    p = as_probs(probs)
    if m_bins < 2:
        raise ConfigError("need at least two bins")
    idx = pt_bin_index(p, m_bins, p.size)
    frac = np.bincount(idx, minlength=m_bins) / p.size
    return 0.5 * float(np.abs(frac - 1.0 / m_bins).sum())


# ---------------------------------------------------------------- entropies


def min_entropy(probs) -> float:
    return float(-np.log2(as_probs(probs).max()))


def renyi_entropy(probs, alpha: float) -> float:
    """(alpha / (1 - alpha)) log2 ||P||_alpha; alpha = inf gives the min-entropy."""
    p = as_probs(probs)
    if alpha < 0 or alpha == 1:
        raise ConfigError("Renyi order must be >= 0 and != 1")
    if math.isinf(alpha):
        return min_entropy(p)
    nz = p[p > 0]
    if alpha == 0:
        return float(np.log2(nz.size))
    # alpha/(1-alpha) * (1/alpha) log2 sum p^alpha
    return float(np.log2(np.sum(nz**alpha)) / (1 - alpha))


# ---------------------------------------------------------------- truncation and quasinorm


@dataclass
class TruncatedVector:
    """A probability vector with an eps-tail of small entries and its largest entry zeroed.

    ``values`` keeps the original index order; ``removed`` lists zeroed indices.
    """

    values: np.ndarray
    removed_weight: float
    removed: np.ndarray
    max_index: int
    original: np.ndarray = field(repr=False)

    @property
    def entries(self) -> np.ndarray:
        return np.sort(self.values)[::-1]

    def restore(self) -> np.ndarray:
        v = self.values.copy()
        v[self.removed] = self.original[self.removed]
        if self.max_index >= 0:
            v[self.max_index] = self.original[self.max_index]
        return v


def truncate(probs, eps: float) -> TruncatedVector:
    """Zero the smallest entries while their total stays <= eps, then zero the largest entry."""
    p = as_probs(probs)
    if not 0 <= eps < 1:
        raise ConfigError("eps must lie in [0, 1)")
    order = np.lexsort((np.arange(p.size), p))  # ascending, ties by index
    csum = np.cumsum(p[order])
    k = int(np.searchsorted(csum, eps * (1 + 1e-12), side="right"))
    removed = order[:k]
    v = p.copy()
    v[removed] = 0.0
    weight = float(csum[k - 1]) if k else 0.0
    max_index = -1
    if k < p.size:
        max_index = int(np.argmax(v))
        v[max_index] = 0.0
    return TruncatedVector(v, weight, removed, max_index, p)


def l23_quasinorm(v) -> float:
    """(sum |v_i|^(2/3))^(3/2)."""
    if isinstance(v, TruncatedVector):
        v = v.values
    v = np.abs(np.asarray(v, dtype=float))
    return float(np.sum(v ** (2.0 / 3.0)) ** 1.5)


def quasinorm_lower_bound(h_min: float, eps: float) -> float:
    """2^(H_inf/2) (1 - eps - 2^(-H_inf))^(3/2), clipped at 0."""
    base = max(1 - eps - 2.0**-h_min, 0.0)
    return 2.0 ** (h_min / 2) * base**1.5


@dataclass
class SampleBounds:
    """Sample-complexity bounds of optimal identity testing, up to universal constants."""

    lower: float
    upper: float
    up_to_constant: bool = True


def vv_sample_bounds(probs, eps: float) -> SampleBounds:
    """max{1/eps, eps^-2 ||P trunc||_{2/3}} with tails 2 eps (lower) and eps/16 (upper)."""
    p = as_probs(probs)
    lo = max(1 / eps, l23_quasinorm(truncate(p, min(2 * eps, 0.999999))) / eps**2)
    hi = max(1 / eps, l23_quasinorm(truncate(p, eps / 16)) / eps**2)
    return SampleBounds(lo, hi)


def second_moment_min_entropy_bound(second_moment_sum: float, delta: float) -> float:
    """Min-entropy exceeded with probability >= 1 - delta: (log2 delta - log2 sum E[P^2]) / 2."""
    if second_moment_sum <= 0 or delta <= 0:
        raise ConfigError("inputs must be positive")
    return 0.5 * (math.log2(delta) - math.log2(second_moment_sum))


def supremacy_tradeoff(gamma: float, delta: float) -> tuple[float, float]:
    """Total-variation error and hard-instance fraction when the relative error is fixed at 1/4."""
    if not 0 < delta < 1 or not 0 < gamma <= 1:
        raise ConfigError("need 0 < delta < 1 and 0 < gamma <= 1")
    return delta / 4, gamma * (1 - delta)
