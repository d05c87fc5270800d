"""Statevector simulation of the sampling circuit families and random matrices.

Qubit ordering is little-endian: qubit ``q`` is bit ``q`` of the outcome index.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError, ConfigError

MAX_QUBITS = 24

_SQ2 = 1 / math.sqrt(2)
_H = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1, -1]).astype(complex)
_T = np.diag([1, np.exp(1j * np.pi / 4)])

# arity of each gate kind; 0 means "acts on every qubit"
GATE_ARITY = {
    "H": 1, "X": 1, "Z": 1, "T": 1, "RZ": 1,
    "CNOT": 2, "CZ": 2, "CCZ": 3,
    "GlobalXRot": 0, "GlobalMS": 0,
    "U": -1,
}


# ---------------------------------------------------------------- data types


@dataclass(frozen=True)
class Gate:
    """One gate of a circuit.

    ``kind`` is one of ``GATE_ARITY``.  ``param`` is an angle in radians for
    RZ and the global rotations.  ``U`` carries an explicit unitary on
    ``qubits`` whose local index is little-endian in the listed qubit order.
    """

    kind: str
    qubits: tuple[int, ...] = ()
    param: float = 0.0
    unitary: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ConfigError(f"unknown gate kind {self.kind!r}")
        arity = GATE_ARITY[self.kind]
        if arity > 0 and len(self.qubits) != arity:
            raise ConfigError(f"{self.kind} takes {arity} qubits, got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ConfigError(f"repeated qubit in {self.kind}{self.qubits}")
        if self.kind == "U":
            if self.unitary is None or self.unitary.shape != (2 ** len(self.qubits),) * 2:
                raise ConfigError("U gate needs a matching unitary matrix")

    @property
    def is_global(self) -> bool:
        return GATE_ARITY[self.kind] == 0

    def matrix(self, n_qubits: int | None = None) -> np.ndarray:
        """Local matrix, or the full matrix on ``n_qubits`` for global gates."""
        k, p = self.kind, self.param
        if k == "H":
            return _H.copy()
        if k == "X":
            return _X.copy()
        if k == "Z":
            return _Z.copy()
        if k == "T":
            return _T.copy()
        if k == "RZ":
            return np.diag([np.exp(-0.5j * p), np.exp(0.5j * p)])
        if k == "CNOT":
            # local index = control + 2*target
            m = np.zeros((4, 4), dtype=complex)
            for c, t in itertools.product((0, 1), repeat=2):
                m[c + 2 * (t ^ c), c + 2 * t] = 1
            return m
        if k == "CZ":
            return np.diag([1, 1, 1, -1]).astype(complex)
        if k == "CCZ":
            d = np.ones(8, dtype=complex)
            d[7] = -1
            return np.diag(d)
        if k == "U":
            return np.array(self.unitary, dtype=complex)
        if n_qubits is None:
            raise ConfigError("global gates need n_qubits for a matrix")
        psi = np.eye(2**n_qubits, dtype=complex)
        return np.stack([_apply_global(self, col, n_qubits) for col in psi.T], axis=1)


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, g: Gate):
        if any(q < 0 or q >= self.n_qubits for q in g.qubits):
            raise ConfigError(f"gate {g.kind}{g.qubits} outside {self.n_qubits} qubits")

    def append(self, g: Gate) -> "Circuit":
        self._check(g)
        self.gates.append(g)
        return self

    def extend(self, gates) -> "Circuit":
        for g in gates:
            self.append(g)
        return self


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ConfigError("amplitude vector length must be 2**n_qubits")
        if abs(np.linalg.norm(self.amplitudes) - 1) > 1e-10:
            raise ConfigError("state is not normalized")


@dataclass
class ProbabilityVector:
    """Normalized distribution over outcome indices; tiny negatives are clamped."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ConfigError("probabilities must be a nonempty vector")
        if np.any(p < -1e-12):
            raise ConfigError("negative probability")
        p = np.clip(p, 0.0, None)
        if abs(p.sum() - 1) > 1e-9:
            raise ConfigError(f"probabilities sum to {p.sum()}")
        self.probs = p

    def __len__(self):
        return self.probs.size

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.probs.size)))


def as_probs(p) -> np.ndarray:
    """Accept a ProbabilityVector or array-like and return a validated array."""
    if isinstance(p, ProbabilityVector):
        return p.probs
    return ProbabilityVector(np.asarray(p, dtype=float)).probs


@dataclass
class IQPWeights:
    """Symmetric angle matrix; diagonal entries are the single-qubit weights."""

    W: np.ndarray
    angle_set: tuple[float, ...] | None = None

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        if self.W.ndim != 2 or self.W.shape[0] != self.W.shape[1]:
            raise ConfigError("W must be square")
        if not np.allclose(self.W, self.W.T):
            raise ConfigError("W must be symmetric")
        if self.angle_set is not None:
            allowed = np.mod(np.asarray(self.angle_set, dtype=float), 2 * np.pi)
            d = np.abs(np.mod(self.W, 2 * np.pi)[..., None] - allowed)
            d = np.minimum(d, 2 * np.pi - d)
            if not np.all(d.min(axis=-1) < 1e-9):
                raise ConfigError("weight outside the declared angle set")

    @property
    def n(self) -> int:
        return self.W.shape[0]


@dataclass
class DegreeThreePolynomial:
    """f(x) = sum of x_i x_j x_k over ``alpha``, x_i x_j over ``beta``, x_i over ``gamma`` (mod 2)."""

    n: int
    alpha: frozenset = frozenset()
    beta: frozenset = frozenset()
    gamma: frozenset = frozenset()

    def __post_init__(self):
        self.alpha = frozenset(tuple(t) for t in self.alpha)
        self.beta = frozenset(tuple(t) for t in self.beta)
        self.gamma = frozenset(int(i) for i in self.gamma)
        for t in itertools.chain(self.alpha, self.beta, ((i,) for i in self.gamma)):
            if len(set(t)) != len(t) or any(i < 0 or i >= self.n for i in t):
                raise ConfigError(f"bad monomial {t}")

    def evaluate(self, bits: np.ndarray) -> np.ndarray:
        """Evaluate on an array of shape (..., n) of 0/1 entries."""
        bits = np.asarray(bits, dtype=np.int64)
        out = np.zeros(bits.shape[:-1], dtype=np.int64)
        for i, j, k in self.alpha:
            out += bits[..., i] * bits[..., j] * bits[..., k]
        for i, j in self.beta:
            out += bits[..., i] * bits[..., j]
        for i in self.gamma:
            out += bits[..., i]
        return out % 2


@dataclass
class ClusterScheme:
    """Angles ``beta`` on an ``rows`` x ``cols`` lattice, site index ``r*cols + c``."""

    rows: int
    cols: int
    beta: np.ndarray

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if self.beta.size != self.rows * self.cols:
            raise ConfigError("beta length must equal rows*cols")

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    def site(self, r: int, c: int) -> int:
        return r * self.cols + c

    def edges(self) -> list[tuple[int, int]]:
        return lattice_edges(self.rows, self.cols)


def lattice_edges(rows: int, cols: int) -> list[tuple[int, int]]:
    """Nearest-neighbour edges of a rows x cols square lattice."""
    e = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                e.append((i, i + 1))
            if r + 1 < rows:
                e.append((i, i + cols))
    return e


# ---------------------------------------------------------------- simulation


def _bits(n: int) -> np.ndarray:
    """Array of shape (2**n, n) with bit q of each index in column q."""
    idx = np.arange(2**n)
    return (idx[:, None] >> np.arange(n)) & 1


def _apply_local(psi: np.ndarray, mat: np.ndarray, qubits, n: int) -> np.ndarray:
    k = len(qubits)
    t = psi.reshape((2,) * n)
    # local matrix reshaped in C order lists the last qubit first
    axes = [n - 1 - q for q in reversed(qubits)]
    m = mat.reshape((2,) * (2 * k))
    t = np.tensordot(m, t, axes=(list(range(k, 2 * k)), axes))
    t = np.moveaxis(t, list(range(k)), axes)
    return t.reshape(-1)


def _apply_hadamards(psi: np.ndarray, n: int) -> np.ndarray:
    for q in range(n):
        psi = _apply_local(psi, _H, (q,), n)
    return psi


def _apply_global(g: Gate, psi: np.ndarray, n: int) -> np.ndarray:
    if g.kind == "GlobalXRot":
        c, s = math.cos(g.param), math.sin(g.param)
        m = np.array([[c, -1j * s], [-1j * s, c]])
        for q in range(n):
            psi = _apply_local(psi, m, (q,), n)
        return psi
    # GlobalMS = exp(-i phi sum_{i<j} X_i X_j), diagonal in the Hadamard basis
    spins = 1 - 2 * _bits(n)
    tot = spins.sum(axis=1)
    pair = (tot**2 - n) / 2
    psi = _apply_hadamards(psi, n)
    psi = psi * np.exp(-1j * g.param * pair)
    return _apply_hadamards(psi, n)


def apply_gate(psi: np.ndarray, g: Gate, n: int) -> np.ndarray:
    if g.is_global:
        return _apply_global(g, psi, n)
    return _apply_local(psi, g.matrix(), g.qubits, n)


def simulate(circuit: Circuit, initial: np.ndarray | None = None, max_qubits: int = MAX_QUBITS) -> StateVector:
    """Apply ``circuit`` to |0...0> (or to ``initial``)."""
    n = circuit.n_qubits
    if n > max_qubits:
        raise CapExceededError(f"{n} qubits exceeds the cap of {max_qubits}")
    if initial is None:
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1
    else:
        psi = np.asarray(initial, dtype=complex).copy()
    for g in circuit.gates:
        psi = apply_gate(psi, g, n)
    # renormalize the rounding drift of long circuits
    psi /= np.linalg.norm(psi)
    return StateVector(n, psi)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense matrix of a small circuit."""
    n = circuit.n_qubits
    cols = []
    for b in range(2**n):
        psi = np.zeros(2**n, dtype=complex)
        psi[b] = 1
        for g in circuit.gates:
            psi = apply_gate(psi, g, n)
        cols.append(psi)
    return np.stack(cols, axis=1)


def born_distribution(state: StateVector) -> ProbabilityVector:
    p = np.abs(state.amplitudes) ** 2
    return ProbabilityVector(p / p.sum())


# ---------------------------------------------------------------- circuit families


def iqp_circuit(w: IQPWeights) -> Circuit:
    """H layer, exp(i(sum w_ij Z_i Z_j + sum w_ii Z_i)), H layer."""
    n = w.n
    c = Circuit(n)
    c.extend(Gate("H", (q,)) for q in range(n))
    for i in range(n):
        if w.W[i, i] != 0:
            c.append(Gate("RZ", (i,), -2 * w.W[i, i]))
    for i in range(n):
        for j in range(i + 1, n):
            if w.W[i, j] != 0:
                c.append(Gate("CNOT", (i, j)))
                c.append(Gate("RZ", (j,), -2 * w.W[i, j]))
                c.append(Gate("CNOT", (i, j)))
    c.extend(Gate("H", (q,)) for q in range(n))
    return c


def polynomial_circuit(f: DegreeThreePolynomial) -> Circuit:
    """H layer, CCZ/CZ/Z gates for the monomials of f, H layer."""
    c = Circuit(f.n)
    c.extend(Gate("H", (q,)) for q in range(f.n))
    c.extend(Gate("CCZ", t) for t in sorted(f.alpha))
    c.extend(Gate("CZ", t) for t in sorted(f.beta))
    c.extend(Gate("Z", (i,)) for i in sorted(f.gamma))
    c.extend(Gate("H", (q,)) for q in range(f.n))
    return c


def cluster_circuit(s: ClusterScheme, outcome_flips: np.ndarray | None = None) -> Circuit:
    """H layer, RZ(beta_i), CZ on lattice edges, H layer.

    ``outcome_flips`` appends X gates at the end, which relabels outcomes.
    """
    N = s.n_sites
    c = Circuit(N)
    c.extend(Gate("H", (q,)) for q in range(N))
    c.extend(Gate("RZ", (q,), float(s.beta[q])) for q in range(N))
    c.extend(Gate("CZ", e) for e in s.edges())
    c.extend(Gate("H", (q,)) for q in range(N))
    if outcome_flips is not None:
        c.extend(Gate("X", (q,)) for q in range(N) if outcome_flips[q])
    return c


def logical_cluster_circuit(betas: np.ndarray) -> Circuit:
    """Encoded 1D circuit of a lattice whose bulk outcomes are all zero.

    ``betas`` has shape (cols, rows).  Each column applies H, RZ(beta) and a
    CZ chain along the rows; a final H layer measures in the X basis.
    """
    betas = np.asarray(betas, dtype=float)
    cols, n = betas.shape
    c = Circuit(n)
    for col in range(cols):
        c.extend(Gate("H", (q,)) for q in range(n))
        c.extend(Gate("RZ", (q,), float(betas[col, q])) for q in range(n))
        c.extend(Gate("CZ", (q, q + 1)) for q in range(n - 1))
    c.extend(Gate("H", (q,)) for q in range(n))
    return c


def logical_cluster_distribution(betas: np.ndarray) -> np.ndarray:
    """Output distribution of ``logical_cluster_circuit`` using diagonal phase layers."""
    betas = np.asarray(betas, dtype=float)
    cols, n = betas.shape
    bits = _bits(n)
    z = 1 - 2 * bits
    cz_phase = np.prod(np.where(bits[:, :-1] & bits[:, 1:], -1.0, 1.0), axis=1) if n > 1 else np.ones(2**n)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    for col in range(cols):
        psi = _apply_hadamards(psi, n)
        psi = psi * np.exp(-0.5j * (z @ betas[col])) * cz_phase
    psi = _apply_hadamards(psi, n)
    p = np.abs(psi) ** 2
    return p / p.sum()


def ngap(f: DegreeThreePolynomial) -> float:
    """2^-n (#zeros - #ones) of f, by enumeration."""
    if f.n > MAX_QUBITS:
        raise CapExceededError("ngap enumerates 2**n inputs")
    vals = f.evaluate(_bits(f.n))
    return float(np.mean(1 - 2 * vals))


def ising_partition_function(w: IQPWeights) -> complex:
    """Sum over spins z of exp(i[sum_{i<j} w_ij z_i z_j + sum_i w_ii z_i])."""
    n = w.n
    if n > MAX_QUBITS:
        raise CapExceededError("partition function enumerates 2**n spins")
    z = 1 - 2 * _bits(n).astype(float)
    off = np.triu(w.W, 1)
    energy = np.einsum("si,ij,sj->s", z, off, z) + z @ np.diag(w.W)
    return complex(np.exp(1j * energy).sum())


# ---------------------------------------------------------------- random matrices


def haar_unitary(D: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a Ginibre matrix with the phases of diag(R) removed."""
    g = (rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def haar_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random orthogonal matrix, same sign fix as ``haar_unitary``."""
    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def random_parallel_circuit(n: int, depth: int, rng: np.random.Generator) -> Circuit:
    """Brickwork of Haar two-qubit gates; each layer is even or odd with probability 1/2."""
    if n % 2:
        raise ConfigError("random_parallel_circuit needs an even qubit count")
    c = Circuit(n)
    for _ in range(depth):
        start = int(rng.integers(2))
        for q in range(start, n - 1, 2):
            c.append(Gate("U", (q, q + 1), unitary=haar_unitary(4, rng)))
    return c


# ---------------------------------------------------------------- permanents


def permanent(X: np.ndarray) -> complex:
    """Permanent by Ryser's inclusion-exclusion formula walked in Gray-code order."""
    X = np.asarray(X, dtype=complex)
    n = X.shape[0]
    if X.shape != (n, n):
        raise ConfigError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0j
    if n > 20:
        raise CapExceededError("permanent limited to n <= 20")
    row_sums = np.zeros(n, dtype=complex)
    in_set = [False] * n
    size = 0
    total = 0j
    for k in range(1, 2**n):
        j = (k & -k).bit_length() - 1
        if in_set[j]:
            row_sums -= X[:, j]
            size -= 1
        else:
            row_sums += X[:, j]
            size += 1
        in_set[j] = not in_set[j]
        term = np.prod(row_sums)
        total += -term if size & 1 else term
    return complex((-1) ** n * total)


def permanent_naive(X: np.ndarray) -> complex:
    """Sum over permutations; reference for small n."""
    X = np.asarray(X, dtype=complex)
    n = X.shape[0]
    return complex(sum(np.prod(X[np.arange(n), list(p)]) for p in itertools.permutations(range(n))))


def boson_probability(U: np.ndarray, S, n: int) -> float:
    """|Perm(U_S)|^2 / prod s_j!, keeping the first n columns and repeating row j s_j times."""
    S = [int(s) for s in S]
    if sum(S) != n or len(S) != U.shape[0] or U.shape[0] < n:
        raise ConfigError("occupation pattern does not match photon and mode numbers")
    rows = [j for j, s in enumerate(S) for _ in range(s)]
    sub = U[np.ix_(rows, range(n))]
    norm = math.prod(math.factorial(s) for s in S)
    return float(abs(permanent(sub)) ** 2 / norm)


def occupation_patterns(m: int, n: int):
    """All occupation sequences of n photons in m modes."""
    for combo in itertools.combinations_with_replacement(range(m), n):
        S = [0] * m
        for j in combo:
            S[j] += 1
        yield tuple(S)


# ---------------------------------------------------------------- ion-trap weights


def iontrap_angle_set(k: int) -> tuple[float, ...]:
    """Multiples of pi/2^k on the circle, as angles in [0, 2 pi)."""
    return tuple(j * np.pi / 2**k for j in range(2 ** (k + 1)))


def iontrap_schedule(k: int) -> list[float]:
    """Time-ordered global rotation angles of one prescription round."""
    return [np.pi / 2 ** (k + 1)] + [np.pi / 2**l for l in range(k, 0, -1)] + [np.pi / 2 ** (k + 1)]


def iontrap_weights_from_flips(n: int, k: int, flips: np.ndarray) -> np.ndarray:
    """Symbolic weight matrix after rounds of global rotations and Z flips.

    ``flips`` has shape (rounds, k+1, n): the Z-flip pattern after each global
    rotation except the last of every round.  A Z flip on qubit i commuted past
    a later global rotation reverses the sign of every weight touching i.
    """
    flips = np.asarray(flips, dtype=np.int64)
    sched = iontrap_schedule(k)
    W = np.zeros((n, n))
    frame = np.zeros(n, dtype=np.int64)
    for rnd in flips:
        for step, phi in enumerate(sched):
            sign_pair = (-1.0) ** (frame[:, None] + frame[None, :])
            np.fill_diagonal(sign_pair, (-1.0) ** frame)
            W += phi * sign_pair
            if step < len(rnd):
                frame = (frame + rnd[step]) % 2
    return np.mod(W, 2 * np.pi)


def iontrap_weights(n: int, k: int, repetitions: int, rng: np.random.Generator) -> IQPWeights:
    """Random IQP weights produced by repeating the Z-flip / global-rotation prescription."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    flips = rng.integers(0, 2, size=(repetitions, k + 1, n))
    W = iontrap_weights_from_flips(n, k, flips)
    W = _snap(W, k)
    return IQPWeights(W, angle_set=iontrap_angle_set(k))


def _snap(W: np.ndarray, k: int) -> np.ndarray:
    step = np.pi / 2**k
    return np.mod(np.round(W / step), 2 ** (k + 1)) * step


def iontrap_closed_form(n: int, k: int, flips: np.ndarray) -> np.ndarray:
    """Single-round weights from the binary expansion: a fixed shift plus signed powers of two.

    With x_ij(l) the parity of the flips on i and j in the first l layers,
    w_ij = pi/2^(k+1) + sum_l (-1)^(x_ij(l)) pi/2^(k+1-l) over the later rotations.
    """
    flips = np.asarray(flips, dtype=np.int64).reshape(k + 1, n)
    sched = iontrap_schedule(k)
    cum = np.cumsum(flips, axis=0) % 2
    W = np.full((n, n), sched[0])
    for l in range(1, len(sched)):
        par = cum[l - 1]
        x = (par[:, None] + par[None, :]) % 2
        np.fill_diagonal(x, par)
        W = W + (-1.0) ** x * sched[l]
    return _snap(np.mod(W, 2 * np.pi), k)


def apply_global_sequence(n: int, k: int, flips: np.ndarray) -> StateVector:
    """Statevector of one prescription round built from GlobalXRot, GlobalMS and Z gates.

    Global gates carry a negative angle so every rotation adds +phi to the weights.
    """
    flips = np.asarray(flips, dtype=np.int64).reshape(-1, k + 1, n)
    c = Circuit(n)
    sched = iontrap_schedule(k)
    for rnd in flips:
        for step, phi in enumerate(sched):
            c.append(Gate("GlobalXRot", (), -phi))
            c.append(Gate("GlobalMS", (), -phi))
            if step < len(rnd):
                c.extend(Gate("Z", (q,)) for q in range(n) if rnd[step][q])
    return simulate(c)
