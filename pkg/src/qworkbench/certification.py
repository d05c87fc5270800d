"""Parent Hamiltonians, fidelity witnesses, rapid stabilizer fidelity estimation and PLM state tests.

Site q of a lattice is qubit q (little-endian).  Parent Hamiltonians are sums
of (1 - S_i) over commuting stabilizer generators, so the ground energy is 0,
the gap is 2 and the norm is twice the number of generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CapExceededError, ConfigError
from .quantum_core import ClusterScheme, IQPWeights, iqp_circuit, cluster_circuit, simulate
from .verification import VerificationVerdict

_I2 = np.eye(2, dtype=complex)
_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def bloch_operator(v) -> np.ndarray:
    """v . (X, Y, Z) for a 3-vector v."""
    return sum(c * p for c, p in zip(v, _PAULI))


def rotated_z(beta: float) -> np.ndarray:
    """Bloch vector of exp(-i beta X/2) Z exp(i beta X/2) = cos(beta) Z - sin(beta) Y."""
    return np.array([0.0, -math.sin(beta), math.cos(beta)])


def rotated_y(beta: float) -> np.ndarray:
    """Bloch vector of exp(-i beta X/2) Y exp(i beta X/2) = cos(beta) Y + sin(beta) Z."""
    return np.array([0.0, math.cos(beta), math.sin(beta)])


@dataclass
class PauliProduct:
    """coefficient * tensor product of single-site unit observables v . (X, Y, Z).

    ``factors`` maps a site to its Bloch vector; absent sites carry the identity.
    """

    n_qubits: int
    factors: dict[int, np.ndarray]
    coefficient: float = 1.0
    labels: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        for q, v in self.factors.items():
            if not 0 <= q < self.n_qubits:
                raise ConfigError("factor site out of range")
            if abs(np.linalg.norm(v) - 1) > 1e-9:
                raise ConfigError("site factors must be unit Bloch vectors")

    @property
    def support(self) -> list[int]:
        return sorted(self.factors)

    def site_matrix(self, q: int) -> np.ndarray:
        v = self.factors.get(q)
        return _I2 if v is None else bloch_operator(v)

    def matrix(self) -> np.ndarray:
        if self.n_qubits > 12:
            raise CapExceededError("dense Pauli products limited to 12 qubits")
        out = np.array([[1.0 + 0j]])
        for q in reversed(range(self.n_qubits)):
            out = np.kron(out, self.site_matrix(q))
        return self.coefficient * out

    def expectation(self, rho: np.ndarray) -> float:
        return float(np.real(np.trace(self.matrix() @ rho)))


@dataclass
class LocalHamiltonian:
    """offset * 1 + sum of terms, with known spectral data."""

    n_qubits: int
    terms: list[PauliProduct]
    offset: float = 0.0
    ground_energy: float | None = 0.0
    gap: float | None = 2.0
    norm_bound: float | None = None
    locality: int = 0
    target: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.locality == 0 and self.terms:
            self.locality = max(len(t.factors) for t in self.terms)
        for t in self.terms:
            if len(t.factors) > self.locality:
                raise ConfigError("term exceeds declared locality")

    @property
    def generators(self) -> list[PauliProduct]:
        """Stabilizers S_i when the Hamiltonian has the form sum (1 - S_i)."""
        return [PauliProduct(t.n_qubits, t.factors, -t.coefficient, t.labels) for t in self.terms]

    @property
    def term_norm(self) -> float:
        """J: norm of one local term 1 - S_i."""
        return 2.0

    def matrix(self) -> np.ndarray:
        D = 2**self.n_qubits
        H = self.offset * np.eye(D, dtype=complex)
        for t in self.terms:
            H = H + t.matrix()
        return H

    def expectation(self, rho: np.ndarray) -> float:
        return float(np.real(np.trace(self.matrix() @ rho)))


# ---------------------------------------------------------------- stabilizer bookkeeping


def _phase_exponent(x1, z1, x2, z2) -> int:
    """Power of i in P1 P2 = i^g P3 for Hermitian Paulis given by (x, z) bits."""
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


@dataclass
class ClusterTableau:
    """Generators Z_i prod_{j nbr i} X_j of the Hadamard-rotated cluster state, in (x, z) bits."""

    n: int
    x: np.ndarray
    z: np.ndarray

    @classmethod
    def lattice(cls, rows: int, cols: int) -> "ClusterTableau":
        from .quantum_core import lattice_edges

        N = rows * cols
        x = np.zeros((N, N), dtype=np.int64)
        z = np.eye(N, dtype=np.int64)
        for a, b in lattice_edges(rows, cols):
            x[a, b] = x[b, a] = 1
        return cls(N, x, z)

    def element(self, bits) -> tuple[int, np.ndarray, np.ndarray]:
        """Product of the generators selected by ``bits``: (sign, x, z)."""
        r = 0
        xs = np.zeros(self.n, dtype=np.int64)
        zs = np.zeros(self.n, dtype=np.int64)
        for i in np.flatnonzero(np.asarray(bits)):
            for q in range(self.n):
                r += _phase_exponent(xs[q], zs[q], self.x[i, q], self.z[i, q])
            xs = xs ^ self.x[i]
            zs = zs ^ self.z[i]
        r %= 4
        if r % 2:
            raise ConfigError("stabilizer product is not Hermitian")
        return (1 if r == 0 else -1), xs, zs


def _rotate(sign: int, xs, zs, beta) -> PauliProduct:
    n = len(xs)
    factors, labels = {}, {}
    for q in range(n):
        if xs[q] and zs[q]:
            factors[q], labels[q] = rotated_y(beta[q]), "Y"
        elif xs[q]:
            factors[q], labels[q] = np.array([1.0, 0.0, 0.0]), "X"
        elif zs[q]:
            factors[q], labels[q] = rotated_z(beta[q]), "Z"
    return PauliProduct(n, factors, float(sign), labels)


def scheme_stabilizer(scheme: ClusterScheme, bits) -> PauliProduct:
    """Product of the rotated generators S_{beta,i} = Z_{beta,i} prod X_j selected by ``bits``."""
    tab = ClusterTableau.lattice(scheme.rows, scheme.cols)
    sign, xs, zs = tab.element(bits)
    return _rotate(sign, xs, zs, scheme.beta)


def stabilizer_sample(scheme: ClusterScheme, rng: np.random.Generator) -> tuple[np.ndarray, PauliProduct]:
    """Uniformly random element of the scheme's stabilizer group, with its selector bits."""
    bits = rng.integers(0, 2, size=scheme.n_sites)
    return bits, scheme_stabilizer(scheme, bits)


def scheme_state(scheme: ClusterScheme) -> np.ndarray:
    return simulate(cluster_circuit(scheme)).amplitudes


# ---------------------------------------------------------------- parent Hamiltonians


def _parent(n: int, gens: list[PauliProduct], target=None) -> LocalHamiltonian:
    terms = [PauliProduct(g.n_qubits, g.factors, -g.coefficient, g.labels) for g in gens]
    return LocalHamiltonian(n, terms, offset=float(len(gens)), ground_energy=0.0, gap=2.0,
                            norm_bound=2.0 * len(gens), target=target)


def beta_parent(scheme: ClusterScheme) -> LocalHamiltonian:
    """sum_i (1 - S_{beta,i}); unique ground state U_beta|0>."""
    N = scheme.n_sites
    gens = [scheme_stabilizer(scheme, np.eye(N, dtype=np.int64)[i]) for i in range(N)]
    target = scheme_state(scheme) if N <= 12 else None
    return _parent(N, gens, target)


def cluster_parent(rows: int, cols: int) -> LocalHamiltonian:
    return beta_parent(ClusterScheme(rows, cols, np.zeros(rows * cols)))


def iqp_parent(w: IQPWeights) -> LocalHamiltonian:
    """Parent Hamiltonian of an IQP state with off-diagonal weights in {0, pi/4} and diagonal in (pi/8)Z.

    Before the final Hadamard layer the state D|+> is stabilized by
    X_i exp(-2i w_ii Z_i) prod_{j: w_ij = pi/4} (-i Z_i Z_j); the Hadamards swap X and Z.
    """
    n = w.n
    off = w.W - np.diag(np.diag(w.W))
    ok_off = np.all(np.isclose(off, 0) | np.isclose(off, np.pi / 4))
    diag8 = np.diag(w.W) / (np.pi / 8)
    if not ok_off or not np.allclose(diag8, np.round(diag8)):
        raise ConfigError("iqp_parent needs off-diagonal weights in {0, pi/4} and diagonal in (pi/8)Z")
    gens = []
    for i in range(n):
        nbrs = [j for j in range(n) if j != i and np.isclose(off[i, j], np.pi / 4)]
        phi = 2 * w.W[i, i]
        # X exp(-i phi Z) = cos(phi) X - sin(phi) Y
        v = np.array([math.cos(phi), -math.sin(phi), 0.0])
        op = bloch_operator(v) * (-1j) ** len(nbrs)
        if len(nbrs) % 2:
            op = op @ _PAULI[2]
        # op is Hermitian and unitary; read off its Bloch vector
        vec = np.array([np.real(np.trace(op @ p)) / 2 for p in _PAULI])
        factors = {i: vec}
        for j in nbrs:
            factors[j] = np.array([0.0, 0.0, 1.0])
        # Hadamard conjugation: (x, y, z) -> (z, -y, x)
        factors = {q: np.array([u[2], -u[1], u[0]]) for q, u in factors.items()}
        gens.append(PauliProduct(n, factors, 1.0))
    target = simulate(iqp_circuit(w)).amplitudes if n <= 12 else None
    return _parent(n, gens, target)


# ---------------------------------------------------------------- preparations


@dataclass
class NoisyPreparation:
    """Either a density operator or a sampler of +-1 outcomes for product observables."""

    n_qubits: int
    rho: np.ndarray | None = None
    sampler: Callable[[PauliProduct, int, np.random.Generator], np.ndarray] | None = None

    def __post_init__(self):
        if self.rho is None and self.sampler is None:
            raise ConfigError("preparation needs a density operator or a sampler")
        if self.rho is not None:
            r = np.asarray(self.rho, dtype=complex)
            if not np.allclose(r, r.conj().T, atol=1e-9) or abs(np.trace(r) - 1) > 1e-9:
                raise ConfigError("density operator must be Hermitian with unit trace")
            if np.linalg.eigvalsh(r).min() < -1e-9:
                raise ConfigError("density operator must be positive semidefinite")
            self.rho = r

    def expectation(self, op: PauliProduct) -> float:
        return op.expectation(self.rho)

    def measure(self, op: PauliProduct, count: int, rng: np.random.Generator) -> np.ndarray:
        """``count`` outcomes +-1 of the product observable (coefficient sign included)."""
        if self.sampler is not None:
            return np.asarray(self.sampler(op, count, rng))
        e = float(np.clip(self.expectation(PauliProduct(op.n_qubits, op.factors, 1.0)), -1, 1))
        plus = rng.random(count) < (1 + e) / 2
        return np.where(plus, 1, -1) * int(np.sign(op.coefficient) or 1)


def depolarized(psi: np.ndarray, p: float) -> np.ndarray:
    """(1 - p)|psi><psi| + p 1/D."""
    D = psi.size
    return (1 - p) * np.outer(psi, psi.conj()) + p * np.eye(D) / D


def random_density_matrix(D: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Normalized G G^dagger with a complex Ginibre G of shape (D, rank)."""
    rank = D if rank is None else rank
    G = rng.standard_normal((D, rank)) + 1j * rng.standard_normal((D, rank))
    r = G @ G.conj().T
    return r / np.trace(r).real


def fidelity_pure(psi: np.ndarray, rho: np.ndarray) -> float:
    return float(np.real(psi.conj() @ rho @ psi))


# ---------------------------------------------------------------- witness


def fidelity_bounds(H: LocalHamiltonian, prep: NoisyPreparation | np.ndarray) -> tuple[float, float]:
    """(1 - <H>/gap, 1 - <H>/||H||) for a Hamiltonian with ground energy 0."""
    if H.gap is None or H.norm_bound is None:
        raise ConfigError("fidelity bounds need the gap and the norm")
    rho = prep.rho if isinstance(prep, NoisyPreparation) else prep
    e = H.expectation(rho) - (H.ground_energy or 0.0)
    return 1 - e / H.gap, 1 - e / H.norm_bound


def witness_gap(F_T: float, gap: float, norm: float, eps: float) -> float:
    """Fidelity gap delta = (1 - F_T)(1 - gap/||H||) + 2 eps gap/||H||."""
    return (1 - F_T) * (1 - gap / norm) + 2 * eps * gap / norm


def witness_measurements(n_terms: int, J: float, gap: float, eps: float, alpha: float) -> int:
    """Copies per term: J^2 n^2 / (2 gap^2 eps^2) ln[-(n + 1) / ln(1 - alpha)]."""
    val = J**2 * n_terms**2 / (2 * gap**2 * eps**2) * math.log(-(n_terms + 1) / math.log(1 - alpha))
    if not math.isfinite(val) or val > 1e12:
        raise CapExceededError("required measurement count is infeasible")
    return int(math.ceil(val))


@dataclass
class WitnessResult(VerificationVerdict):
    m: int = 0
    delta: float = 0.0
    witness: float = 0.0


def witness_test(prep: NoisyPreparation, H: LocalHamiltonian, F_T: float, alpha: float, eps: float,
                 rng: np.random.Generator) -> WitnessResult:
    """Estimate 1 - <H>/gap from single-qubit measurements of each term; reject if below F_T + eps."""
    if eps > (1 - F_T) / 2 + 1e-15:
        raise ConfigError("eps must not exceed (1 - F_T)/2")
    gens = H.generators
    n = len(gens)
    m = witness_measurements(n, H.term_norm, H.gap, eps, alpha)
    energy = 0.0
    for g in gens:
        # term 1 - S contributes 0 on outcome +1 and 2 on outcome -1
        e = float(np.clip(prep.expectation(g), -1, 1)) if prep.rho is not None else None
        if e is not None:
            minus = rng.binomial(m, (1 - e) / 2)
        else:
            minus = int(np.sum(prep.measure(g, m, rng) < 0))
        energy += 2 * minus / m
    w = 1 - energy / H.gap
    thr = F_T + eps
    return WitnessResult(w >= thr, w, thr, "witness", m=m,
                         delta=witness_gap(F_T, H.gap, H.norm_bound, eps), witness=w)


# ---------------------------------------------------------------- rapid fidelity


def rapid_sample_count(eps: float, delta: float) -> int:
    """ceil(ln(2/delta) 2 / eps^2)."""
    return int(math.ceil(math.log(2 / delta) * 2 / eps**2))


def group_expectations(scheme: ClusterScheme, rho: np.ndarray) -> np.ndarray:
    """Tr[s sigma] for every group element, indexed by the little-endian selector bits."""
    N = scheme.n_sites
    if N > 10:
        raise CapExceededError("full group enumeration limited to 10 sites")
    bits = (np.arange(2**N)[:, None] >> np.arange(N)) & 1
    return np.array([scheme_stabilizer(scheme, b).expectation(rho) for b in bits])


def fidelity_group_average(scheme: ClusterScheme, rho: np.ndarray) -> float:
    """2^-N sum over the stabilizer group of Tr[s sigma]."""
    return float(np.mean(group_expectations(scheme, rho)))


def rapid_fidelity(prep: NoisyPreparation, scheme: ClusterScheme, eps: float, delta: float,
                   rng: np.random.Generator, cache: np.ndarray | None = None) -> float:
    """Average of +-1 outcomes of m uniformly sampled stabilizers, each on a fresh copy.

    ``cache`` may hold ``group_expectations`` for a density-operator preparation.
    """
    m = rapid_sample_count(eps, delta)
    N = scheme.n_sites
    if cache is None and prep.rho is not None and N <= 10:
        cache = group_expectations(scheme, prep.rho)
    if cache is not None:
        idx = rng.integers(0, 2**N, size=m)
        e = np.clip(cache[idx], -1, 1)
        out = np.where(rng.random(m) < (1 + e) / 2, 1.0, -1.0)
        return float(out.mean())
    total = 0.0
    for _ in range(m):
        _, s = stabilizer_sample(scheme, rng)
        total += float(prep.measure(s, 1, rng)[0])
    return total / m


def threshold_fidelity(eps_tv: float) -> float:
    """F_T = 1 - eps_tv^2."""
    if not 0 < eps_tv <= 1:
        raise ConfigError("eps_tv must lie in (0, 1]")
    return 1 - eps_tv**2


def rapid_table(eps_tvs=(1 / 22, 1 / 5), eps_fraction: float = 0.2, delta: float = 0.01) -> list[dict]:
    """Threshold fidelity and copy count for each total-variation target.

    The estimation accuracy is eps_fraction * (1 - F_T).
    """
    rows = []
    for e in eps_tvs:
        F = threshold_fidelity(e)
        acc = eps_fraction * (1 - F)
        rows.append({"eps_tv": e, "F_T": F, "eps": acc, "delta": delta, "m_opt": rapid_sample_count(acc, delta)})
    return rows


# ---------------------------------------------------------------- PLM


@dataclass
class PLMResult(VerificationVerdict):
    spectral_gap: float = 0.0
    required_m: int = 0
    rounds_run: int = 0


def strategy_operator(strategy: Sequence[tuple[float, np.ndarray]]) -> np.ndarray:
    mu = np.array([w for w, _ in strategy], dtype=float)
    if np.any(mu < 0) or abs(mu.sum() - 1) > 1e-9:
        raise ConfigError("strategy weights must form a probability vector")
    Om = sum(w * np.asarray(P) for w, P in strategy)
    for _, P in strategy:
        ev = np.linalg.eigvalsh(np.asarray(P))
        if ev.min() < -1e-9 or ev.max() > 1 + 1e-9:
            raise ConfigError("strategy operators must satisfy 0 <= P <= 1")
    return Om


def strategy_gap(strategy) -> float:
    """1 minus the second largest eigenvalue of the effective measurement operator."""
    ev = np.sort(np.linalg.eigvalsh(strategy_operator(strategy)))[::-1]
    return float(1 - ev[1]) if ev.size > 1 else 1.0


def stabilizer_strategy(generators: Sequence[PauliProduct]) -> list[tuple[float, np.ndarray]]:
    """Measure a uniformly chosen generator; pass on outcome +1."""
    k = len(generators)
    return [(1 / k, (np.eye(2**g.n_qubits) + g.matrix()) / 2) for g in generators]


def plm_test(prep: NoisyPreparation, strategy, m: int, rng: np.random.Generator,
             eps: float = 0.05, delta: float = 0.05) -> PLMResult:
    """m pass/fail rounds with randomly chosen tests; reject at the first failure."""
    Om = strategy_operator(strategy)
    ev = np.sort(np.linalg.eigvalsh(Om))[::-1]
    gap = float(1 - ev[1]) if ev.size > 1 else 1.0
    need = int(math.ceil(math.log(1 / delta) / (eps * gap))) if gap > 0 else -1
    mu = np.array([w for w, _ in strategy])
    pass_probs = np.array([np.real(np.trace(np.asarray(P) @ prep.rho)) for _, P in strategy])
    for r in range(m):
        j = rng.choice(len(mu), p=mu)
        if rng.random() >= pass_probs[j]:
            return PLMResult(False, float(r), float(m), "fail", spectral_gap=gap, required_m=need, rounds_run=r + 1)
    return PLMResult(True, float(m), float(m), "pass", spectral_gap=gap, required_m=need, rounds_run=m)
