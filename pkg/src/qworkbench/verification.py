"""Classical verification statistics: identity testing, cross-entropy, HOG/BOG, row norms, X-programs.

Every sample statistic has an ``*_exact`` twin that takes the sampled
distribution itself instead of samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import as_samples, l23_quasinorm, pt_bin_index
from .errors import ConfigError, NumericalError
from .quantum_core import as_probs


@dataclass
class VerificationVerdict:
    accept: bool
    statistic_value: float
    threshold: float
    branch: str = ""


def _counts(samples, N: int) -> np.ndarray:
    return np.bincount(as_samples(samples, N), minlength=N)


# ---------------------------------------------------------------- identity testing


def chi23_statistic(samples, target, subset=None) -> float:
    """Sum over the subset of ((X_x - k P_x)^2 - X_x) / P_x^(2/3), X_x the count of x."""
    P = as_probs(target)
    X = _counts(samples, P.size).astype(float)
    k = X.sum()
    idx = np.arange(P.size) if subset is None else np.asarray(subset, dtype=np.int64)
    p, x = P[idx], X[idx]
    zero = p <= 0
    if np.any(zero & (x > 0)):
        return math.inf
    p, x = p[~zero], x[~zero]
    return float(np.sum(((x - k * p) ** 2 - x) / p ** (2 / 3)))


def chi23_expectation(target, k: int, subset=None) -> float:
    """Mean of the statistic for k iid draws from the target: -k sum P_x^(4/3)."""
    P = as_probs(target)
    idx = np.arange(P.size) if subset is None else np.asarray(subset, dtype=np.int64)
    return float(-k * np.sum(P[idx] ** (4 / 3)))


def vv_partition(target, eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split outcomes, sorted by decreasing target probability, into (largest, M, S).

    S is the longest tail of total weight <= eps/8, M the rest minus the largest outcome.
    """
    P = as_probs(target)
    order = np.lexsort((np.arange(P.size), -P))
    tail = np.cumsum(P[order][::-1])[::-1]  # tail[i] = weight of positions i..N-1
    # first position whose tail weight is within eps/8
    cut = int(np.argmax(tail <= eps / 8 * (1 + 1e-12))) if np.any(tail <= eps / 8 * (1 + 1e-12)) else P.size
    cut = max(cut, 1)
    return order[:1], order[1:cut], order[cut:]


def vv_identity_test(samples, target, eps: float, threshold_const: float = 4.0) -> VerificationVerdict:
    """Two-branch identity test: chi_{2/3} statistic on the bulk, then a count test on the light tail."""
    P = as_probs(target)
    k = len(as_samples(samples, P.size))
    _, M, S = vv_partition(P, eps)
    stat = chi23_statistic(samples, P, M)
    thr = threshold_const * k * l23_quasinorm(P[M]) ** (1 / 3)
    if stat > thr:
        return VerificationVerdict(False, stat, thr, "bulk")
    X = _counts(samples, P.size)
    tail = float(X[S].sum())
    tail_thr = 3 * eps * k / 16
    if tail > tail_thr:
        return VerificationVerdict(False, tail, tail_thr, "tail")
    return VerificationVerdict(True, stat, thr, "accept")


# ---------------------------------------------------------------- cross-entropy family


def xeb_fidelity(samples, target) -> float:
    """Mean of N P(x) - 1 over the samples."""
    P = as_probs(target)
    x = as_samples(samples, P.size)
    return float(np.mean(P.size * P[x] - 1))


def xeb_fidelity_exact(q, target) -> float:
    P, Q = as_probs(target), as_probs(q)
    return float(P.size * np.dot(Q, P) - 1)


def _entropy(P: np.ndarray) -> float:
    nz = P[P > 0]
    return float(-np.sum(nz * np.log(nz)))


def ce_difference(samples, target, bits: bool = False) -> float:
    """Empirical cross-entropy minus the target entropy, in nats unless ``bits``."""
    P = as_probs(target)
    px = P[as_samples(samples, P.size)]
    if np.any(px <= 0):
        return math.inf
    val = float(np.mean(-np.log(px))) - _entropy(P)
    return val / math.log(2) if bits else val


def ce_difference_exact(q, target, bits: bool = False) -> float:
    P, Q = as_probs(target), as_probs(q)
    if np.any((Q > 0) & (P <= 0)):
        return math.inf
    m = Q > 0
    val = float(-np.sum(Q[m] * np.log(P[m]))) - _entropy(P)
    return val / math.log(2) if bits else val


def lower_median(P) -> float:
    s = np.sort(as_probs(P))
    return float(s[(s.size - 1) // 2])


def _hog_from_fraction(frac: float) -> float:
    return 2 / math.log(2) * (frac - 0.5)


def heavy_fraction(samples, target) -> float:
    P = as_probs(target)
    return float(np.mean(P[as_samples(samples, P.size)] >= lower_median(P)))


def hog_fidelity(samples, target) -> float:
    """(2/ln 2)(fraction of samples with P(x) >= median - 1/2)."""
    return _hog_from_fraction(heavy_fraction(samples, target))


def hog_fidelity_exact(q, target) -> float:
    P, Q = as_probs(target), as_probs(q)
    return _hog_from_fraction(float(Q[P >= lower_median(P)].sum()))


def hog_check(samples, target, level: float = 2 / 3) -> bool:
    return heavy_fraction(samples, target) >= level


def _bog(qbins: np.ndarray, ref: np.ndarray) -> float:
    return 0.5 * float(np.abs(qbins - ref).sum())


def bog_distance(samples, target, m_bins: int, reference: str = "target") -> float:
    """Binned TV estimate over bins of equal Porter-Thomas weight.

    Each sample lands in the bin of its target probability.  The empirical bin
    fractions are compared with the target's own bin weights (``reference =
    "target"``) or with the flat profile 1/m (``"flat"``).
    """
    P = as_probs(target)
    if m_bins < 1:
        raise ConfigError("need at least one bin")
    if m_bins == 1:
        return 0.0
    bins = pt_bin_index(P, m_bins, P.size)
    x = as_samples(samples, P.size)
    qb = np.bincount(bins[x], minlength=m_bins) / max(x.size, 1)
    return _bog(qb, _bog_reference(P, bins, m_bins, reference))


def bog_distance_exact(q, target, m_bins: int, reference: str = "target") -> float:
    P, Q = as_probs(target), as_probs(q)
    if m_bins == 1:
        return 0.0
    bins = pt_bin_index(P, m_bins, P.size)
    qb = np.bincount(bins, weights=Q, minlength=m_bins)
    return _bog(qb, _bog_reference(P, bins, m_bins, reference))


def _bog_reference(P, bins, m, reference):
    if reference == "target":
        return np.bincount(bins, weights=P, minlength=m)
    if reference == "flat":
        return np.full(m, 1 / m)
    raise ConfigError(f"unknown BOG reference {reference!r}")


# ---------------------------------------------------------------- row norms


def row_norm(X: np.ndarray) -> float:
    """n^-n times the product of squared row norms."""
    X = np.asarray(X)
    n = X.shape[0]
    if X.shape != (n, n):
        raise ConfigError("row norm needs a square matrix")
    return float(np.prod(np.sum(np.abs(X) ** 2, axis=1)) / n**n)


def row_norm_discriminator(matrices, threshold: float = 0.073) -> VerificationVerdict:
    """Mean |R* - 1| over submatrices; above ``threshold`` the samples are attributed to a boson sampler."""
    stat = float(np.mean([abs(row_norm(X) - 1) for X in matrices]))
    return VerificationVerdict(stat > threshold, stat, threshold)


def gaussian_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """iid standard complex Gaussian entries, E|x|^2 = 1."""
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)


# ---------------------------------------------------------------- noise estimate


def depolarization_estimate(xeb_avg: float, n: int, moment_sum: float) -> float:
    """Circuit fidelity p_c^m = XEB / (2^n sum E[P^2] - 1)."""
    if moment_sum <= 0:
        raise NumericalError("second-moment term must be positive")
    return xeb_avg / moment_sum


# ---------------------------------------------------------------- X-programs


def xprogram_amplitudes(P: np.ndarray, theta: float) -> np.ndarray:
    """Amplitudes of exp(i theta sum_rows X^row)|0>, indexed little-endian over the n columns."""
    P = np.asarray(P, dtype=np.int64) % 2
    k, n = P.shape
    if k > 20 or n > 16:
        raise ConfigError("X-program too large for enumeration")
    a = (np.arange(2**k)[:, None] >> np.arange(k)) & 1
    x = (a @ P) % 2
    xi = x @ (1 << np.arange(n))
    w = a.sum(axis=1)
    amp = np.cos(theta) ** (k - w) * (1j * np.sin(theta)) ** w
    out = np.zeros(2**n, dtype=complex)
    np.add.at(out, xi, amp)
    return out


def xprogram_bias(P: np.ndarray, theta: float, s) -> tuple[float, float]:
    """Probability that x.s = 0, by outcome enumeration and by the code average.

    The code average is E over codewords c of the code generated by the rows
    of P not orthogonal to s, of cos^2(theta (n_s - 2 wt(c))).
    """
    P = np.asarray(P, dtype=np.int64) % 2
    s = np.asarray(s, dtype=np.int64) % 2
    k, n = P.shape
    prob = np.abs(xprogram_amplitudes(P, theta)) ** 2
    x = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
    direct = float(prob[(x @ s) % 2 == 0].sum())
    Ps = P[(P @ s) % 2 == 1]
    ns = Ps.shape[0]
    if ns == 0:
        return direct, 1.0
    d = x  # every d in {0,1}^n hits each codeword equally often
    wt = ((d @ Ps.T) % 2).sum(axis=1)
    code = float(np.mean(np.cos(theta * (ns - 2 * wt)) ** 2))
    return direct, code
