"""World-line Monte Carlo with sign tracking, exact average-sign oracles and nonstoquasticity measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError, ConfigError, NumericalError

POSITIVE_THRESHOLD = 1e-12

_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Y2 = np.array([[0.0, -1.0], [1.0, 0.0]])  # Y / i, so Y (x) Y = -(Y2 (x) Y2)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
_I = np.eye(2)


@dataclass
class RealHamiltonian:
    matrix: np.ndarray
    n_qubits: int | None = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ConfigError("Hamiltonian must be square")
        if not np.allclose(self.matrix, self.matrix.T, atol=1e-10):
            raise ConfigError("Hamiltonian must be symmetric")
        if self.n_qubits is not None and 2**self.n_qubits != self.D:
            raise ConfigError("dimension does not match qubit count")

    @property
    def D(self) -> int:
        return self.matrix.shape[0]


def _mat(H) -> np.ndarray:
    return H.matrix if isinstance(H, (RealHamiltonian, TransferMatrix)) else np.asarray(H, dtype=float)


def site_operator(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """op on qubit ``site`` of n (little-endian: qubit 0 is the last Kronecker factor)."""
    out = np.array([[1.0]])
    for q in reversed(range(n)):
        out = np.kron(out, op if q == site else _I)
    return out


def pair_operator(op1, i, op2, j, n) -> np.ndarray:
    out = np.array([[1.0]])
    for q in reversed(range(n)):
        out = np.kron(out, op1 if q == i else (op2 if q == j else _I))
    return out


def yy_operator(i: int, j: int, n: int) -> np.ndarray:
    """Real matrix of Y_i Y_j."""
    return -pair_operator(_Y2, i, _Y2, j, n)


# ---------------------------------------------------------------- transfer matrices


@dataclass
class TransferMatrix:
    matrix: np.ndarray
    beta: float
    m: int

    @property
    def D(self) -> int:
        return self.matrix.shape[0]

    def diagonal_condition(self) -> bool:
        """True when 1 - diag(T) <= 1 entrywise, i.e. diag(beta H / m) <= 1."""
        return bool(np.all(1 - np.diag(self.matrix) <= 1 + 1e-12))


def transfer_matrix(H, beta: float, m: int) -> TransferMatrix:
    """T = 1 - (beta/m) H."""
    if m < 1 or beta < 0:
        raise ConfigError("need m >= 1 and beta >= 0")
    A = _mat(H)
    return TransferMatrix(np.eye(A.shape[0]) - (beta / m) * A, float(beta), int(m))


def path_amplitude(T, path) -> float:
    """Product of T(l_k | l_{k+1}) along consecutive indices of ``path``."""
    A = _mat(T)
    p = np.asarray(path, dtype=np.int64)
    return float(np.prod(A[p[:-1], p[1:]]))


def average_sign_exact(H, beta: float | None = None, m: int | None = None) -> float:
    """Tr[T^m] / Tr[|T|^m]; pass either a Hamiltonian with (beta, m) or a TransferMatrix."""
    T = H if isinstance(H, TransferMatrix) else transfer_matrix(H, beta, m)
    if T.D > 2**12:
        raise CapExceededError("dense average sign limited to dimension 4096")
    num = np.trace(np.linalg.matrix_power(T.matrix, T.m))
    den = np.trace(np.linalg.matrix_power(np.abs(T.matrix), T.m))
    if den == 0:
        raise NumericalError("all closed paths have zero weight")
    return float(num / den)


def log_inverse_sign(H, beta: float, m: int) -> float:
    s = average_sign_exact(H, beta, m)
    if s <= 0:
        return math.inf
    return -math.log(s)


@dataclass
class ChainConfig:
    steps: int = 200_000
    burn_in: int | None = None
    batches: int = 50
    swap_rate: float = 0.1


def _initial_path(A: np.ndarray, m: int) -> np.ndarray:
    d = np.abs(np.diag(A))
    if d.max() > 0:
        return np.full(m, int(np.argmax(d)), dtype=np.int64)
    if m % 2 == 0:
        i, j = np.unravel_index(np.argmax(np.abs(A)), A.shape)
        if A[i, j] != 0:
            return np.array([i, j] * (m // 2), dtype=np.int64)
    raise NumericalError("could not find a closed path of nonzero weight")


def _path_chain(A: np.ndarray, m: int, cfg: ChainConfig, rng: np.random.Generator):
    """Metropolis over closed paths with weight |amplitude|; yields (sign, first index) per step.

    Two symmetric moves: resample one time slice uniformly, or (with probability
    ``cfg.swap_rate``) exchange two basis labels along the whole path.  The second
    move keeps the chain ergodic when off-diagonal entries are small or absent.
    """
    D = A.shape[0]
    absA = np.abs(A)
    sgnA = np.sign(A)
    with np.errstate(divide="ignore"):
        logA = np.log(absA)
    path = _initial_path(A, m)
    sign = float(np.prod(sgnA[path, np.roll(path, -1)]))
    burn = cfg.steps // 10 if cfg.burn_in is None else cfg.burn_in
    total = burn + cfg.steps
    slices = rng.integers(0, m, size=total)
    values = rng.integers(0, D, size=total)
    partners = rng.integers(0, D, size=total)
    swap = rng.random(total) < (cfg.swap_rate if D > 1 else 0.0)
    u = rng.random(total)
    signs = np.empty(cfg.steps)
    firsts = np.empty(cfg.steps, dtype=np.int64)
    for t in range(total):
        if swap[t]:
            a, b = values[t], partners[t]
            if a != b:
                new = np.where(path == a, b, np.where(path == b, a, path))
                nxt_new = np.roll(new, -1)
                nxt_old = np.roll(path, -1)
                dlog = logA[new, nxt_new].sum() - logA[path, nxt_old].sum()
                if np.isfinite(dlog) and math.log(u[t] + 1e-300) < dlog:
                    path = new
                    sign = float(np.prod(sgnA[path, nxt_new]))
        else:
            k, v = slices[t], values[t]
            prev, nxt = path[k - 1], path[(k + 1) % m]
            old = path[k]
            if v != old:
                if m == 1:
                    w_old, w_new = absA[old, old], absA[v, v]
                else:
                    w_old = absA[prev, old] * absA[old, nxt]
                    w_new = absA[prev, v] * absA[v, nxt]
                if w_new > 0 and u[t] * w_old < w_new:
                    if m == 1:
                        sign = sgnA[v, v]
                    else:
                        sign *= sgnA[prev, old] * sgnA[old, nxt] * sgnA[prev, v] * sgnA[v, nxt]
                    path[k] = v
        if t >= burn:
            signs[t - burn] = sign
            firsts[t - burn] = path[0]
    return signs, firsts


def _batch_stderr(x: np.ndarray, batches: int) -> float:
    b = np.array_split(x, batches)
    means = np.array([c.mean() for c in b])
    return float(means.std(ddof=1) / math.sqrt(len(means)))


def average_sign_mc(H, beta: float, m: int, cfg: ChainConfig | None, rng: np.random.Generator) -> tuple[float, float]:
    """Mean sign of closed world-line paths sampled with weight |amplitude|, with a batch-means error."""
    cfg = cfg or ChainConfig()
    T = transfer_matrix(H, beta, m)
    signs, _ = _path_chain(T.matrix, m, cfg, rng)
    return float(signs.mean()), _batch_stderr(signs, cfg.batches)


def thermal_expectation(H, O, beta: float, m: int | None = None, mode: str = "exact",
                        rng: np.random.Generator | None = None, cfg: ChainConfig | None = None):
    """<O> at inverse temperature beta for a diagonal observable O (vector or diagonal matrix)."""
    A = _mat(H)
    O = np.asarray(O, dtype=float)
    if O.ndim == 2:
        if not np.allclose(O, np.diag(np.diag(O))):
            raise ConfigError("only diagonal observables are supported")
        O = np.diag(O)
    if mode == "exact":
        w, V = np.linalg.eigh(A)
        boltz = np.exp(-beta * (w - w.min()))
        rho_diag = (V**2) @ boltz
        return float(rho_diag @ O / boltz.sum())
    if mode == "transfer":
        Tm = np.linalg.matrix_power(transfer_matrix(A, beta, m).matrix, m)
        return float(np.diag(Tm) @ O / np.trace(Tm))
    if mode != "mc":
        raise ConfigError(f"unknown mode {mode!r}")
    cfg = cfg or ChainConfig()
    T = transfer_matrix(A, beta, m)
    signs, firsts = _path_chain(T.matrix, m, cfg, rng)
    num = signs * O[firsts]
    est = num.mean() / signs.mean()
    # delta-method error from batch means of the ratio
    b_num = np.array([c.mean() for c in np.array_split(num, cfg.batches)])
    b_den = np.array([c.mean() for c in np.array_split(signs, cfg.batches)])
    ratios = b_num / b_den
    return float(est), float(ratios.std(ddof=1) / math.sqrt(cfg.batches))


def sample_requirement(avg_sign: float, eps: float):
    """ceil(1 / (sign^2 eps^2)); infinite when the sign vanishes."""
    if avg_sign == 0:
        return math.inf
    return int(math.ceil(1 / (avg_sign**2 * eps**2) - 1e-9))


def transition_gap(T: np.ndarray) -> float:
    """Spectral gap of a row-stochastic transition matrix (diagnostic for small chains)."""
    from .samplers import transition_matrix_gap

    return transition_matrix_gap(T)


# ---------------------------------------------------------------- nonstoquasticity


def positive_part(H) -> np.ndarray:
    """Off-diagonal entries above the positivity threshold; zero elsewhere."""
    A = _mat(H).copy()
    np.fill_diagonal(A, 0.0)
    return np.where(A > POSITIVE_THRESHOLD, A, 0.0)


def nonstoq(H, p: float = 1) -> float:
    """D^-1 times the l_p norm of the positive off-diagonal part."""
    Hp = positive_part(H)
    D = Hp.shape[0]
    if math.isinf(p):
        return float(Hp.max() / D)
    return float(np.sum(Hp**p) ** (1 / p) / D)


@dataclass
class TwoLocalSpec:
    """sum_{i<j} (a XX + b YY + c ZZ)_{ij} + sum_{i!=j} x_ij X_i Z_j + sum_i (alpha X + gamma Z)_i.

    a, b, c are symmetric n x n (upper triangle used); x[i, j] is the weight of X_i Z_j.
    """

    n: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    x: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "TwoLocalSpec":
        z = lambda: np.zeros((n, n))
        return cls(n, z(), z(), z(), z(), np.zeros(n), np.zeros(n))

    def __post_init__(self):
        for name in "abcx":
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (self.n, self.n):
                raise ConfigError(f"{name} must be {self.n}x{self.n}")
            if name != "x":
                v = np.triu(v, 1) + np.triu(v, 1).T
            else:
                v = v - np.diag(np.diag(v))
            setattr(self, name, v)
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(self.n)
        self.gamma = np.asarray(self.gamma, dtype=float).reshape(self.n)

    def copy(self) -> "TwoLocalSpec":
        return TwoLocalSpec(self.n, self.a.copy(), self.b.copy(), self.c.copy(), self.x.copy(),
                            self.alpha.copy(), self.gamma.copy())


def two_local_matrix(spec: TwoLocalSpec) -> np.ndarray:
    n = spec.n
    if n > 12:
        raise CapExceededError("dense two-local build limited to 12 qubits")
    H = np.zeros((2**n, 2**n))
    for i in range(n):
        for j in range(i + 1, n):
            if spec.a[i, j]:
                H += spec.a[i, j] * pair_operator(_X, i, _X, j, n)
            if spec.b[i, j]:
                H += spec.b[i, j] * yy_operator(i, j, n)
            if spec.c[i, j]:
                H += spec.c[i, j] * pair_operator(_Z, i, _Z, j, n)
    for i in range(n):
        for j in range(n):
            if i != j and spec.x[i, j]:
                H += spec.x[i, j] * pair_operator(_X, i, _Z, j, n)
        if spec.alpha[i]:
            H += spec.alpha[i] * site_operator(_X, i, n)
        if spec.gamma[i]:
            H += spec.gamma[i] * site_operator(_Z, i, n)
    return H


def xz_exact_sum(alpha_i: float, x_row) -> float:
    """2^-k sum over sign patterns of max{alpha + sum_j (-1)^l_j x_j, 0}."""
    x = np.asarray(x_row, dtype=float)
    k = x.size
    if k > 24:
        raise CapExceededError("XZ enumeration limited to degree 24")
    signs = 1 - 2 * ((np.arange(2**k)[:, None] >> np.arange(k)) & 1)
    return float(np.mean(np.maximum(alpha_i + signs @ x, 0.0)))


def nu1_two_local_closed(spec: TwoLocalSpec) -> float:
    """Closed-form nu_1 of a real 2+1-local Hamiltonian."""
    iu = np.triu_indices(spec.n, 1)
    a, b = spec.a[iu], spec.b[iu]
    pair = 0.5 * (np.maximum(a + b, 0) + np.maximum(a - b, 0))
    total = float(pair.sum())
    for i in range(spec.n):
        row = spec.x[i][spec.x[i] != 0]
        total += xz_exact_sum(spec.alpha[i], row)
    return total


def nu1_xz_sample_count(k: int, xmax: float, eps: float, delta: float) -> int:
    """16 k max|x|^2 ln(2/delta) / eps^2, rounded up."""
    return int(math.ceil(16 * k * xmax**2 * math.log(2 / delta) / eps**2))


def nu1_xz_mc(alpha_i: float, x_row, eps: float, delta: float, rng: np.random.Generator,
              chunk: int = 1_000_000) -> float:
    """Average of max{alpha + sigma . x, 0} over iid Rademacher vectors sigma."""
    x = np.asarray(x_row, dtype=float)
    k = x.size
    if k == 0 or np.all(x == 0):
        return float(max(alpha_i, 0.0))
    m = nu1_xz_sample_count(k, float(np.abs(x).max()), eps, delta)
    total, done = 0.0, 0
    while done < m:
        c = min(chunk, m - done)
        sig = rng.integers(0, 2, size=(c, k), dtype=np.int8) * 2 - 1
        total += float(np.maximum(alpha_i + sig @ x, 0.0).sum())
        done += c
    return total / m


# ---------------------------------------------------------------- example Hamiltonians


def example_10_1(n: int) -> RealHamiltonian:
    """1 + sum_{i<j} -(X_i X_j - Y_i Y_j)/2 + sum_i X_i: nu_1 = n yet every closed path is positive."""
    D = 2**n
    H = np.eye(D)
    for i in range(n):
        for j in range(i + 1, n):
            H += -0.5 * (pair_operator(_X, i, _X, j, n) - yy_operator(i, j, n))
        H += site_operator(_X, i, n)
    return RealHamiltonian(H, n)


def example_10_2_hamiltonian(a: float, b: float, beta: float, m: int) -> RealHamiltonian:
    """(m/beta)(1 - 1(x)X - (XX + YY)/2 + ((a+b) X(x)Z + (b-a) X(x)1)/2), first factor on qubit 1."""
    XZ = np.kron(_X, _Z)
    XI = np.kron(_X, _I)
    IX = np.kron(_I, _X)
    XX = np.kron(_X, _X)
    YY = -np.kron(_Y2, _Y2)
    H = np.eye(4) - IX - 0.5 * (XX + YY) + 0.5 * ((a + b) * XZ + (b - a) * XI)
    return RealHamiltonian(m / beta * H, 2)


def example_10_2(a: float, b: float, m: int = 1, beta: float = 1.0) -> TransferMatrix:
    """Transfer matrix [[0,1,-b,0],[1,0,1,a],[-b,1,0,1],[0,a,1,0]]."""
    T = np.array([[0, 1, -b, 0], [1, 0, 1, a], [-b, 1, 0, 1], [0, a, 1, 0]], dtype=float)
    return TransferMatrix(T, beta, m)


def example_10_2_bound(a: float, b: float, m: int) -> float:
    """(2^(m-1) - 1/2) |b - a| / a."""
    return (2 ** (m - 1) - 0.5) * abs(b - a) / a


def h_alpha(H, alpha: float) -> RealHamiltonian:
    """(H - H_+ + alpha H_+) / (D nu_1(H)), so that D nu_1 = alpha."""
    A = _mat(H)
    Hp = positive_part(A)
    nu = nonstoq(A, 1)
    if nu == 0:
        raise NumericalError("H_alpha needs a nonstoquastic H")
    return RealHamiltonian((A - Hp + alpha * Hp) / (A.shape[0] * nu))


def translation_invariant(h: np.ndarray, n_sites: int, d: int = 2, periodic: bool = True) -> np.ndarray:
    """sum_i h on sites (i, i+1) of a chain with local dimension d.

    Site 0 is the most significant tensor factor here; translation symmetry makes
    the ordering immaterial for the quantities computed from these chains.
    """
    D = d**n_sites
    if D > 2**14:
        raise CapExceededError("dense chain too large")
    H = np.zeros((D, D))
    bonds = n_sites if periodic else n_sites - 1
    h4 = np.asarray(h, dtype=float).reshape(d, d, d, d)
    for i in range(bonds):
        j = (i + 1) % n_sites
        H += _two_site(h4, i, j, n_sites, d)
    return H


def _two_site(h4: np.ndarray, i: int, j: int, n: int, d: int) -> np.ndarray:
    D = d**n
    # act with h on tensor axes (i, j) of the identity
    eye = np.eye(D).reshape((d,) * n + (D,))
    out = np.tensordot(h4, eye, axes=([2, 3], [i, j]))
    out = np.moveaxis(out, [0, 1], [i, j])
    return out.reshape(D, D)


def random_ti_term(rng: np.random.Generator, d: int = 2) -> np.ndarray:
    """Random real symmetric nearest-neighbour term with Gaussian entries."""
    g = rng.standard_normal((d * d, d * d))
    return (g + g.T) / 2
