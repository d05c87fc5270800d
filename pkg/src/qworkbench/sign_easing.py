"""Easing the sign problem: on-site orthogonal basis search and the MAXCUT gadget.

A translation-invariant chain with nearest-neighbour term h is scored by the
effective measure nu1~(h): the positive entries of h(x)1 + 1(x)h on the index
patterns where the middle site changes and the right site does not.  Summed
over sites this reproduces the chain's unnormalized nonstoquasticity,
||H_+||_1 = n d^(n-3) nu1~(h) for periodic chains with n >= 3.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import CapExceededError, ConfigError
from .qmc import TwoLocalSpec, average_sign_exact, nu1_two_local_closed, translation_invariant
from .quantum_core import haar_orthogonal

log = logging.getLogger(__name__)

_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_PAULI_Y = np.array([[0.0, -1j], [1j, 0.0]])
_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


@dataclass
class LocalTerm:
    d: int
    h: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        if self.h.shape != (self.d**2, self.d**2):
            raise ConfigError(f"term must be {self.d**2}x{self.d**2}")
        if not np.allclose(self.h, self.h.T, atol=1e-10):
            raise ConfigError("term must be symmetric")


@dataclass
class OnsiteOrthogonal:
    d: int
    O: np.ndarray

    def __post_init__(self):
        self.O = np.asarray(self.O, dtype=float)
        if self.O.shape != (self.d, self.d):
            raise ConfigError(f"basis change must be {self.d}x{self.d}")
        if np.abs(self.O.T @ self.O - np.eye(self.d)).max() > 1e-9:
            raise ConfigError("basis change is not orthogonal")


@dataclass
class OptimizerConfig:
    """``p`` picks nu1 or nu2; ``alpha=None`` uses the exact positive part (fine for p=2)."""

    p: int = 1
    alpha: float | None = 50.0
    max_iters: int = 500
    grad_tol: float = 1e-10
    restarts: int = 1
    init: str = "haar-random"
    perturbation: float = 1e-2
    polish: bool = True

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ConfigError("p must be 1 or 2")
        if self.alpha is not None and self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if self.init not in ("identity", "perturbed-identity", "haar-random"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.max_iters < 0 or self.restarts < 1:
            raise ConfigError("need max_iters >= 0 and restarts >= 1")


@dataclass
class EasingResult:
    O: np.ndarray
    trace: list[float]
    nu1: float
    iterations: int = 0
    converged: bool = False
    stages: dict = field(default_factory=dict)


def _term(h) -> LocalTerm:
    if isinstance(h, LocalTerm):
        return h
    h = np.asarray(h, dtype=float)
    return LocalTerm(int(round(math.sqrt(h.shape[0]))), h)


def _orth(O) -> np.ndarray:
    return O.O if isinstance(O, OnsiteOrthogonal) else np.asarray(O, dtype=float)


# ---------------------------------------------------------------- measures


def conjugate_local(h, O) -> LocalTerm:
    """(O (x) O) h (O (x) O)^T."""
    t, O = _term(h), _orth(O)
    if O.shape != (t.d, t.d):
        raise ConfigError("basis change and term dimension differ")
    P = np.kron(O, O)
    out = P @ t.h @ P.T
    return LocalTerm(t.d, (out + out.T) / 2)


@functools.lru_cache(maxsize=None)
def _pattern_mask(d: int) -> np.ndarray:
    idx = np.indices((d, d, d)).reshape(3, -1)
    i2, i3 = idx[1], idx[2]
    mask = (i2[:, None] != i2[None, :]) & (i3[:, None] == i3[None, :])
    mask.setflags(write=False)
    return mask


def _three_site(h: np.ndarray, d: int) -> np.ndarray:
    e = np.eye(d)
    return np.kron(h, e) + np.kron(e, h)


def effective_entries(h) -> np.ndarray:
    """Entries of h(x)1 + 1(x)h on the nu1~ index set."""
    t = _term(h)
    if t.d > 6:
        raise CapExceededError("effective measure enumerates d^6 entries; d <= 6")
    return _three_site(t.h, t.d)[_pattern_mask(t.d)]


def effective_nu1(h) -> float:
    e = effective_entries(h)
    return float(np.maximum(e, 0.0).sum())


def effective_nu2(h) -> float:
    """Squared-positive-part analogue used as a smooth pre-optimization target."""
    e = effective_entries(h)
    return float((np.maximum(e, 0.0) ** 2).sum())


def smooth_positive(x, alpha: float):
    """f_alpha(x) = x + log(1 + exp(-alpha x)) / alpha, evaluated without overflow."""
    if alpha <= 0:
        raise ConfigError("alpha must be positive")
    x = np.asarray(x, dtype=float)
    return np.logaddexp(0.0, alpha * x) / alpha


def _smooth_slope(x, alpha: float):
    # derivative of f_alpha: the logistic function of alpha x
    return 0.5 * (1 + np.tanh(0.5 * alpha * np.asarray(x, dtype=float)))


def _penalty(e: np.ndarray, alpha: float | None, p: int) -> tuple[float, np.ndarray]:
    """Objective value and its derivative with respect to each entry."""
    if alpha is None:
        g = np.maximum(e, 0.0)
        dg = (e > 0).astype(float)
    else:
        g = smooth_positive(e, alpha)
        dg = _smooth_slope(e, alpha)
    if p == 1:
        return float(g.sum()), dg
    return float((g**2).sum()), 2 * g * dg


def smooth_objective(h, alpha: float | None, p: int = 1) -> float:
    """Sum of f_alpha(entry)^p over the nu1~ index set."""
    return _penalty(effective_entries(h), alpha, p)[0]


def _value_and_gradient(t: LocalTerm, O: np.ndarray, alpha, p, need_grad=True):
    d = t.d
    P = np.kron(O, O)
    hO = P @ t.h @ P.T
    mask = _pattern_mask(d)
    val, de = _penalty(_three_site(hO, d)[mask], alpha, p)
    if not need_grad:
        return val, None
    G = np.zeros((d**3, d**3))
    G[mask] = de
    G6 = G.reshape((d,) * 6)
    # pull back through M = h(O) (x) 1 + 1 (x) h(O)
    Gh = np.einsum("abcefc->abef", G6) + np.einsum("abcaef->bcef", G6)
    Gh = Gh.reshape(d * d, d * d)
    # h(O) = P h P^T, and h is symmetric
    GP = (Gh + Gh.T) @ P @ t.h
    G4 = GP.reshape(d, d, d, d)
    grad = np.einsum("abef,bf->ae", G4, O) + np.einsum("abef,ae->bf", G4, O)
    return val, grad


def objective_value(h, O, alpha: float | None, p: int = 1) -> float:
    """Objective of the conjugated term h(O)."""
    return _value_and_gradient(_term(h), _orth(O), alpha, p, need_grad=False)[0]


def objective_gradient(h, O, alpha: float | None, p: int = 1) -> np.ndarray:
    """Euclidean gradient of the objective of h(O) with respect to the entries of O."""
    return _value_and_gradient(_term(h), _orth(O), alpha, p)[1]


def skew_gradient(G: np.ndarray, O: np.ndarray) -> np.ndarray:
    """Riemannian gradient on O(d) in the right-translated frame: G O^T - O G^T."""
    return G @ O.T - O @ G.T


# ---------------------------------------------------------------- Riemannian conjugate gradient


def _polar(A: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(A)
    return U @ Vt


def _initial_basis(d: int, init: str, rng: np.random.Generator, perturbation: float) -> np.ndarray:
    if init == "identity":
        return np.eye(d)
    if init == "perturbed-identity":
        A = rng.standard_normal((d, d)) * perturbation
        return _polar(expm(A - A.T))
    return haar_orthogonal(d, rng)


def _cg_run(t: LocalTerm, O: np.ndarray, alpha, p: int, max_iters: int, grad_tol: float) -> EasingResult:
    d = t.d
    restart_every = max(d * (d - 1) // 2, 1)
    f, G = _value_and_gradient(t, O, alpha, p)
    W = skew_gradient(G, O)
    H = -W
    trace = [f]
    step = None
    converged = False
    since_restart = 0
    it = 0
    while it < max_iters:
        gnorm2 = float(np.sum(W * W))
        if math.sqrt(gnorm2) < grad_tol:
            converged = True
            break
        slope = 0.5 * float(np.sum(W * H))
        if slope >= 0:
            H, slope = -W, -0.5 * gnorm2
            since_restart = 0
        hn = float(np.linalg.norm(H))
        s = 0.5 / hn if step is None else min(2 * step, math.pi / hn)
        accepted = None
        for _ in range(60):
            O_new = _polar(expm(s * H) @ O)
            f_new = _value_and_gradient(t, O_new, alpha, p, need_grad=False)[0]
            if f_new <= f + 1e-4 * s * slope:
                accepted = (O_new, f_new)
                break
            s *= 0.5
        if accepted is None:
            if since_restart == 0:
                converged = True  # steepest descent cannot decrease further
                break
            log.info("line search failed; restarting with steepest descent")
            H, since_restart = -W, 0
            continue
        O, f = accepted
        step = s
        it += 1
        trace.append(f)
        _, G = _value_and_gradient(t, O, alpha, p)
        W_new = skew_gradient(G, O)
        since_restart += 1
        if since_restart >= restart_every:
            H, since_restart = -W_new, 0
        else:
            gamma = max(0.0, float(np.sum((W_new - W) * W_new)) / max(gnorm2, 1e-300))
            H = -W_new + gamma * H
        W = W_new
    return EasingResult(O, trace, effective_nu1(conjugate_local(t, O)), it, converged)


def cg_minimize(h, config: OptimizerConfig, rng: np.random.Generator, O0=None) -> EasingResult:
    """Conjugate-gradient descent over O(d) with Polak-Ribiere+ updates and Armijo backtracking.

    Runs ``config.restarts`` independent starts and keeps the lowest exact nu1~.
    """
    t = _term(h)
    best = None
    for r in range(config.restarts):
        start = _orth(O0) if (O0 is not None and r == 0) else _initial_basis(t.d, config.init, rng, config.perturbation)
        res = _cg_run(t, start, config.alpha, config.p, config.max_iters, config.grad_tol)
        if best is None or res.nu1 < best.nu1:
            best = res
    return best


def hybrid_minimize(h, config: OptimizerConfig, rng: np.random.Generator) -> EasingResult:
    """nu2 pre-optimization followed by smoothed nu1, compared with smoothed nu1 from the same start.

    With ``config.polish`` the winner gets a final exact-nu2 descent, kept only if it lowers nu1~.
    """
    t = _term(h)
    best = None
    for _ in range(config.restarts):
        start = _initial_basis(t.d, config.init, rng, config.perturbation)
        pre = _cg_run(t, start, None, 2, config.max_iters, config.grad_tol)
        staged = _cg_run(t, pre.O, config.alpha, 1, config.max_iters, config.grad_tol)
        direct = _cg_run(t, start, config.alpha, 1, config.max_iters, config.grad_tol)
        win = staged if staged.nu1 <= direct.nu1 else direct
        win.stages = {"nu2": pre.nu1, "staged": staged.nu1, "direct": direct.nu1}
        if config.polish and win.nu1 > 0:
            pol = _cg_run(t, win.O, None, 2, config.max_iters, config.grad_tol)
            win.stages["polish"] = pol.nu1
            if pol.nu1 < win.nu1:
                pol.stages = win.stages
                win = pol
        if best is None or win.nu1 < best.nu1:
            best = win
    return best


# ---------------------------------------------------------------- model terms


def hidden_stoquastic(d: int, rng: np.random.Generator, return_basis: bool = False):
    """Stoquastic term with uniform random spectrum, hidden by a Haar on-site rotation.

    With ``return_basis`` also returns the O whose transpose undoes the rotation.
    """
    V = haar_orthogonal(d * d, rng)
    h = V @ np.diag(rng.uniform(-1, 1, d * d)) @ V.T
    off = h - np.diag(np.diag(h))
    hs = h - np.maximum(off, 0.0)
    O = haar_orthogonal(d, rng)
    term = conjugate_local(LocalTerm(d, hs), O)
    return (term, O) if return_basis else term


def _spin(half: bool):
    s = 0.5 if half else 1.0
    return [s * _PAULI_X, s * _PAULI_Y, s * _PAULI_Z]


def _heisenberg(i: int, j: int, n: int, half: bool) -> np.ndarray:
    """S_i . S_j on n qubits, qubit 0 the most significant factor."""
    out = np.zeros((2**n, 2**n), dtype=complex)
    for S in _spin(half):
        m = np.array([[1.0]])
        for q in range(n):
            m = np.kron(m, S if q in (i, j) else np.eye(2))
        out += m
    if np.abs(out.imag).max() > 1e-12:
        raise ArithmeticError("Heisenberg coupling should be real")
    return out.real


# qubit order inside a two-dimer term: (site i, leg 1), (i, 2), (i+1, 1), (i+1, 2)
def jmodel_term(J0: float, J1: float, J2: float, J3: float, half_spin: bool = True) -> LocalTerm:
    """Dimer term of the triangular ladder: J0 leg-1 bond, J1 leg-2 bond, J2 rung, J3 diagonal."""
    h = (J0 * _heisenberg(0, 2, 4, half_spin) + J1 * _heisenberg(1, 3, 4, half_spin)
         + J2 * _heisenberg(0, 1, 4, half_spin) + J3 * _heisenberg(2, 1, 4, half_spin))
    return LocalTerm(4, h)


def ladder_term(Jpar: float, Jperp: float, Jx: float, half_spin: bool = True) -> LocalTerm:
    """Dimer term of the cross-coupled square ladder; the rung sits on the left dimer."""
    if min(Jpar, Jperp, Jx) < 0:
        raise ConfigError("ladder couplings must be non-negative")
    h = (Jpar * (_heisenberg(0, 2, 4, half_spin) + _heisenberg(1, 3, 4, half_spin))
         + Jperp * _heisenberg(0, 1, 4, half_spin)
         + Jx * (_heisenberg(0, 3, 4, half_spin) + _heisenberg(2, 1, 4, half_spin)))
    return LocalTerm(4, h)


def sign_after_easing(term, O, n_sites: int, beta: float, m: int, periodic: bool = True) -> tuple[float, float]:
    """Exact average sign of the chain built from the term before and after the rotation."""
    t = _term(term)
    if t.d**n_sites > 2**12:
        raise CapExceededError("dense sign evaluation limited to dimension 4096")
    before = translation_invariant(t.h, n_sites, t.d, periodic)
    after = translation_invariant(conjugate_local(t, O).h, n_sites, t.d, periodic)
    return average_sign_exact(before, beta, m), average_sign_exact(after, beta, m)


# ---------------------------------------------------------------- MAXCUT gadget


@dataclass
class GadgetInstance:
    """XX on every graph edge plus a penalized ZZ triangle through one ancilla per edge.

    Graph vertices are qubits 0..v-1; the ancilla of edge k is qubit v + k.
    """

    n_vertices: int
    edges: list[tuple[int, int]]
    C: float
    spec: TwoLocalSpec

    @property
    def n_qubits(self) -> int:
        return self.spec.n


def _clean_edges(n_vertices: int, edges) -> list[tuple[int, int]]:
    seen = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j or not (0 <= i < n_vertices and 0 <= j < n_vertices):
            raise ConfigError(f"bad edge ({i}, {j})")
        e = (min(i, j), max(i, j))
        if e in seen:
            raise ConfigError(f"duplicate edge {e}")
        seen.add(e)
    return sorted(seen)


def max_degree(n_vertices: int, edges) -> int:
    deg = np.zeros(n_vertices, dtype=int)
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    return int(deg.max()) if n_vertices else 0


def maxcut_gadget(n_vertices: int, edges, mode: str = "clifford") -> GadgetInstance:
    """C = 4 deg(G) for Clifford transformations, (2 deg G')^2 = (4 deg G)^2 for orthogonal ones."""
    edges = _clean_edges(n_vertices, edges)
    deg = max_degree(n_vertices, edges)
    if mode == "clifford":
        C = 4.0 * deg
    elif mode == "orthogonal":
        C = float((4 * deg) ** 2)
    else:
        raise ConfigError(f"unknown gadget mode {mode!r}")
    spec = TwoLocalSpec.zeros(n_vertices + len(edges))
    for k, (i, j) in enumerate(edges):
        a = n_vertices + k
        spec.a[i, j] = spec.a[j, i] = 1.0
        spec.c[i, j] = spec.c[j, i] = C
        spec.c[i, a] = spec.c[a, i] = -C
        spec.c[a, j] = spec.c[j, a] = -C
    return GadgetInstance(n_vertices, edges, C, spec)


def _terms(spec: TwoLocalSpec) -> list[tuple[float, str, int, str, int]]:
    """Non-zero terms as (coefficient, pauli_i, i, pauli_j, j); single-site terms use j = -1."""
    out = []
    n = spec.n
    for i in range(n):
        for j in range(i + 1, n):
            for coef, p in ((spec.a[i, j], "X"), (spec.b[i, j], "Y"), (spec.c[i, j], "Z")):
                if coef:
                    out.append((float(coef), p, i, p, j))
        for j in range(n):
            if i != j and spec.x[i, j]:
                out.append((float(spec.x[i, j]), "X", i, "Z", j))
        if spec.alpha[i]:
            out.append((float(spec.alpha[i]), "X", i, "", -1))
        if spec.gamma[i]:
            out.append((float(spec.gamma[i]), "Z", i, "", -1))
    return out


def _site_image(p: str, w, x, z):
    """Image of a Pauli under W^w X^x Z^z conjugation: (new label, sign), vectorized over configs."""
    sx, sz = 1 - 2 * x, 1 - 2 * z  # x flips Z, z flips X
    if p == "X":
        return np.where(w == 1, "Z", "X"), sz
    if p == "Z":
        return np.where(w == 1, "X", "Z"), sx
    # Y ~ XZ; the Hadamard swaps the order, costing a sign
    return np.full(np.shape(w), "Y"), sx * sz * (1 - 2 * w)


def clifford_conjugate(spec: TwoLocalSpec, w, x, z) -> TwoLocalSpec:
    """Apply the on-site Clifford W^w X^x Z^z to every qubit of a 2+1-local spec."""
    n = spec.n
    w, x, z = (np.asarray(v, dtype=np.int64).reshape(n) % 2 for v in (w, x, z))
    out = TwoLocalSpec.zeros(n)
    for coef, pi, i, pj, j in _terms(spec):
        li, si = _site_image(pi, w[i], x[i], z[i])
        li = str(li)
        if j < 0:
            if li == "X":
                out.alpha[i] += si * coef
            else:
                out.gamma[i] += si * coef
            continue
        lj, sj = _site_image(pj, w[j], x[j], z[j])
        lj = str(lj)
        c = si * sj * coef
        if li == lj:
            M = {"X": out.a, "Y": out.b, "Z": out.c}[li]
            M[i, j] += c
            M[j, i] += c
        elif li == "X":
            out.x[i, j] += c
        else:
            out.x[j, i] += c
    return out


def _nu1_batch(n: int, pair: dict, xz: np.ndarray, alpha: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Closed-form nu1 for a batch of specs (same shapes as in nu1_two_local_closed)."""
    total = np.zeros(alpha.shape[0])
    for a, b in pair.values():
        total += 0.5 * (np.maximum(a + b, 0) + np.maximum(a - b, 0))
    for i in range(n):
        row = xz[:, i, :]
        if not np.any(row) and not np.any(alpha[:, i]):
            continue
        vals = alpha[:, i, None] + row @ signs.T
        total += np.maximum(vals, 0).mean(axis=1)
    return total


def _orbit_nu1(spec: TwoLocalSpec, W: np.ndarray, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    K, n = W.shape
    pair: dict[tuple[int, int], list[np.ndarray]] = {}
    xz = np.zeros((K, n, n))
    alpha = np.zeros((K, n))
    for coef, pi, i, pj, j in _terms(spec):
        li, si = _site_image(pi, W[:, i], X[:, i], Z[:, i])
        if j < 0:
            alpha[:, i] += np.where(li == "X", si * coef, 0.0)
            continue
        lj, sj = _site_image(pj, W[:, j], X[:, j], Z[:, j])
        c = si * sj * coef
        key = (min(i, j), max(i, j))
        a, b = pair.setdefault(key, [np.zeros(K), np.zeros(K)])
        a += np.where((li == "X") & (lj == "X"), c, 0.0)
        b += np.where((li == "Y") & (lj == "Y"), c, 0.0)
        xz[:, i, j] += np.where((li == "X") & (lj == "Z"), c, 0.0)
        xz[:, j, i] += np.where((li == "Z") & (lj == "X"), c, 0.0)
    signs = 1 - 2 * ((np.arange(2**n)[:, None] >> np.arange(n)) & 1)
    return _nu1_batch(n, pair, xz, alpha, signs)


def brute_force_clifford_optimum(instance, mode: str = "zflip", block: int = 4096) -> tuple[float, dict]:
    """Exact minimum of the closed-form nu1 over on-site orthogonal Cliffords.

    ``mode="zflip"`` varies only z (up to 20 qubits); ``"clifford"`` varies w, x, z (up to 8).
    """
    spec = instance.spec if isinstance(instance, GadgetInstance) else instance
    n = spec.n
    if mode == "zflip":
        if n > 20:
            raise CapExceededError("Z-flip enumeration limited to 20 qubits")
        n_bits = n
    elif mode == "clifford":
        if n > 8:
            raise CapExceededError("Clifford enumeration limited to 8 qubits")
        n_bits = 3 * n
    else:
        raise ConfigError(f"unknown brute-force mode {mode!r}")
    if n == 0:
        return 0.0, {"w": np.zeros(0, int), "x": np.zeros(0, int), "z": np.zeros(0, int)}
    best_val, best_cfg = math.inf, None
    total = 2**n_bits
    for start in range(0, total, block):
        codes = np.arange(start, min(start + block, total))
        bits = (codes[:, None] >> np.arange(n_bits)) & 1
        if mode == "zflip":
            W = X = np.zeros_like(bits)
            Z = bits
        else:
            W, X, Z = bits[:, :n], bits[:, n:2 * n], bits[:, 2 * n:]
        vals = _orbit_nu1(spec, W, X, Z)
        k = int(np.argmin(vals))
        if vals[k] < best_val - 1e-12:
            best_val = float(vals[k])
            best_cfg = {"w": W[k].copy(), "x": X[k].copy(), "z": Z[k].copy()}
    return best_val, best_cfg


def maxcut_brute_force(n_vertices: int, edges) -> int:
    """Largest number of edges cut by a two-colouring."""
    edges = _clean_edges(n_vertices, edges)
    if not edges:
        return 0
    best = 0
    for colours in itertools.product((0, 1), repeat=n_vertices):
        best = max(best, sum(colours[i] != colours[j] for i, j in edges))
    return best


def all_graphs(n_vertices: int):
    """Every labelled simple graph on n vertices, as an edge list."""
    pairs = list(itertools.combinations(range(n_vertices), 2))
    for mask in range(2 ** len(pairs)):
        yield [pairs[k] for k in range(len(pairs)) if mask >> k & 1]


def xz_lower_bound(x) -> float:
    """max_j |x_j| 2^(k-1), a lower bound on sum over sign patterns of max{sum +-x_j, 0}."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size < 1:
        raise ConfigError("need at least one coefficient")
    return float(np.abs(x).max() * 2 ** (x.size - 1))


def xz_exact(x) -> float:
    """sum over lambda in {0,1}^k of max{sum_j (-1)^lambda_j x_j, 0}."""
    x = np.asarray(x, dtype=float).reshape(-1)
    k = x.size
    if k > 24:
        raise CapExceededError("enumeration limited to k <= 24")
    signs = 1 - 2 * ((np.arange(2**k)[:, None] >> np.arange(k)) & 1)
    return float(np.maximum(signs @ x, 0).sum())


def spec_nu1(spec: TwoLocalSpec) -> float:
    return nu1_two_local_closed(spec)
