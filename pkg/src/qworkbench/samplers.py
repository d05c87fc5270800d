"""Rejection, marginal, Metropolis and inverse-CDF samplers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NumericalError
from .quantum_core import as_probs


@dataclass
class DiscreteDistribution:
    """Distribution over ``range(N)`` given by a probability oracle.

    ``marginal(prefix)`` returns the probability that the first bits (most
    significant first) equal ``prefix``; it is only needed for marginal sampling.
    """

    N: int
    prob: Callable[[int], float]
    marginal: Callable[[tuple[int, ...]], float] | None = None
    sampler: Callable[[np.random.Generator], int] | None = None

    @classmethod
    def from_vector(cls, p, n_bits: int | None = None) -> "DiscreteDistribution":
        p = as_probs(p)
        N = p.size
        if n_bits is None:
            n_bits = max(1, int(np.ceil(np.log2(N))))
        cdf = np.cumsum(p)

        def prob(x):
            return float(p[x])

        def marginal(prefix):
            k = len(prefix)
            shift = n_bits - k
            val = 0
            for b in prefix:
                val = (val << 1) | int(b)
            lo, hi = val << shift, (val + 1) << shift
            return float(p[lo:min(hi, N)].sum())

        def sampler(rng):
            return int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), N - 1))

        return cls(N, prob, marginal, sampler)

    def vector(self) -> np.ndarray:
        return np.array([self.prob(x) for x in range(self.N)])


@dataclass
class MarkovProposal:
    propose: Callable[[object, np.random.Generator], object]
    density: Callable[[object, object], float]


def rejection_sample(
    target: DiscreteDistribution,
    proposal: DiscreteDistribution,
    c: float,
    rng: np.random.Generator,
    max_iters: int | None = None,
    return_trials: bool = False,
):
    """Draw x from the proposal and accept with probability p(x)/(c q(x))."""
    if proposal.sampler is None:
        raise ConfigError("proposal must be samplable")
    cap = max_iters if max_iters is not None else int(1e6 * max(c, 1.0))
    for trial in range(1, cap + 1):
        x = proposal.sampler(rng)
        q = proposal.prob(x)
        p = target.prob(x)
        if p > c * q * (1 + 1e-12):
            raise NumericalError(f"envelope violated at {x}: p={p} > c q={c * q}")
        if rng.random() * c * q < p:
            return (x, trial) if return_trials else x
    raise NumericalError("rejection sampler hit its iteration cap; check the envelope constant")


def marginal_sample(dist: DiscreteDistribution, n_bits: int, rng: np.random.Generator) -> int:
    """Sample bit by bit from the conditionals P_k(x_k | x_1..x_{k-1})."""
    if dist.marginal is None:
        raise ConfigError("marginal oracle required")
    prefix: tuple[int, ...] = ()
    prev = 1.0
    for _ in range(n_bits):
        p0 = dist.marginal(prefix + (0,))
        p1 = dist.marginal(prefix + (1,))
        if prev <= 0:
            raise NumericalError("conditioning on a zero-probability prefix")
        if abs(p0 + p1 - prev) > 1e-9 * max(1.0, prev):
            raise NumericalError("marginals are inconsistent")
        bit = int(rng.random() * (p0 + p1) >= p0)
        prefix = prefix + (bit,)
        prev = p1 if bit else p0
    val = 0
    for b in prefix:
        val = (val << 1) | b
    return val


def metropolis_accept_prob(f_x: float, f_y: float, q_xy: float, q_yx: float) -> float:
    """min{f(y) q(x|y) / (f(x) q(y|x)), 1} for a move x -> y."""
    num = f_y * q_yx
    den = f_x * q_xy
    if den <= 0:
        return 1.0
    return min(num / den, 1.0)


def metropolis_chain(
    f: Callable[[object], float],
    proposal: MarkovProposal,
    x0,
    length: int,
    rng: np.random.Generator,
    burn_in: int | None = None,
    return_acceptance: bool = False,
):
    """Metropolis chain; rejected moves repeat the current state.

    Returns ``length`` states recorded after ``burn_in`` (default length // 10)
    discarded steps.
    """
    if burn_in is None:
        burn_in = length // 10
    x = x0
    fx = f(x)
    if fx <= 0:
        raise ConfigError("chain must start at a state of positive weight")
    out = []
    accepted = 0
    for step in range(burn_in + length):
        y = proposal.propose(x, rng)
        fy = f(y)
        a = metropolis_accept_prob(fx, fy, proposal.density(y, x), proposal.density(x, y))
        if rng.random() < a:
            x, fx = y, fy
            accepted += step >= burn_in
        if step >= burn_in:
            out.append(x)
    if return_acceptance:
        return out, accepted / max(length, 1)
    return out


def uniform_proposal(N: int) -> MarkovProposal:
    """Propose any state uniformly; symmetric."""
    return MarkovProposal(lambda x, rng: int(rng.integers(N)), lambda y, x: 1.0 / N)


def single_flip_proposal(n_bits: int) -> MarkovProposal:
    """Flip one uniformly chosen bit of an integer state; symmetric."""
    return MarkovProposal(lambda x, rng: x ^ (1 << int(rng.integers(n_bits))), lambda y, x: 1.0 / n_bits)


def inverse_cdf_sample(probs, count: int, rng: np.random.Generator) -> np.ndarray:
    """iid samples from an enumerable distribution."""
    p = as_probs(probs)
    cdf = np.cumsum(p)
    u = rng.random(count) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), p.size - 1).astype(np.int64)


def transition_matrix_gap(P: np.ndarray) -> float:
    """1 - |second largest eigenvalue| of a row-stochastic matrix."""
    ev = np.sort(np.abs(np.linalg.eigvals(np.asarray(P, dtype=float))))[::-1]
    return float(1 - ev[1]) if ev.size > 1 else 1.0


def counts(samples: Sequence[int], N: int) -> np.ndarray:
    return np.bincount(np.asarray(samples, dtype=np.int64), minlength=N)
