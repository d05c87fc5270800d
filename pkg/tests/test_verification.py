import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qworkbench import distributions as dist
from qworkbench import quantum_core as qc
from qworkbench import verification as ver
from qworkbench.errors import NumericalError
from qworkbench.rng import make_rng
from qworkbench.samplers import inverse_cdf_sample


def haar_target(n, rng):
    psi = qc.haar_unitary(2**n, rng)[:, 0]
    return np.abs(psi) ** 2


# ---------------------------------------------------------------- chi_{2/3} and identity testing


def test_chi23_point_mass():
    assert ver.chi23_statistic([0] * 7, [1, 0, 0]) == -7


def test_chi23_hand_value():
    val = ver.chi23_statistic([0, 0, 0, 1], [0.5, 0.5])
    assert math.isclose(val, -2 * 2 ** (2 / 3))
    assert abs(val + 3.175) < 1e-3


def test_chi23_zero_probability_sentinel():
    assert ver.chi23_statistic([1], [1, 0]) == math.inf


def test_chi23_expectation_matches_draws():
    r = make_rng(2)
    P = np.array([0.4, 0.3, 0.2, 0.1])
    k = 50
    vals = [ver.chi23_statistic(inverse_cdf_sample(P, k, r), P) for _ in range(4000)]
    mu = ver.chi23_expectation(P, k)
    assert math.isclose(mu, -k * np.sum(P ** (4 / 3)))
    assert abs(np.mean(vals) - mu) < 3 * np.std(vals) / math.sqrt(len(vals))


def test_vv_partition_covers_outcomes():
    P = dist.porter_thomas_fixture(256)
    top, M, S = ver.vv_partition(P, 0.2)
    assert sorted(np.concatenate([top, M, S]).tolist()) == list(range(256))
    assert P[S].sum() <= 0.2 / 8 + 1e-12
    assert P[top[0]] == P.max()


def test_vv_point_mass_accepts():
    assert ver.vv_identity_test([2] * 30, np.eye(4)[2], 0.1).accept


def test_vv_completeness_and_soundness():
    r = make_rng(3)
    P = dist.porter_thomas_fixture(2**10)
    eps = 0.2
    k = int(10 * dist.vv_sample_bounds(P, eps).upper)
    U = np.full(P.size, 1 / P.size)
    assert dist.tv_distance(P, U) >= eps
    acc_ideal = sum(ver.vv_identity_test(inverse_cdf_sample(P, k, r), P, eps).accept for _ in range(100))
    acc_unif = sum(ver.vv_identity_test(inverse_cdf_sample(U, k, r), P, eps).accept for _ in range(100))
    assert acc_ideal >= 67
    assert acc_unif <= 33


# ---------------------------------------------------------------- cross-entropy family


def test_xeb_examples():
    assert ver.xeb_fidelity([0], [1, 0]) == 1
    r = make_rng(4)
    P = haar_target(10, r)
    U = np.full(P.size, 1 / P.size)
    assert abs(ver.xeb_fidelity_exact(U, P)) < 1e-12
    x = inverse_cdf_sample(P, 20000, r)
    ideal = ver.xeb_fidelity_exact(P, P)
    assert abs(ideal - 1) < 0.2
    assert abs(ver.xeb_fidelity(x, P) - ideal) < 4 * np.std(P.size * P[x]) / math.sqrt(x.size)
    xu = inverse_cdf_sample(U, 20000, r)
    assert abs(ver.xeb_fidelity(xu, P)) < 4 * np.std(P.size * P[xu]) / math.sqrt(xu.size)


def test_ce_difference_examples():
    r = make_rng(5)
    P = haar_target(10, r)
    U = np.full(P.size, 1 / P.size)
    assert ver.ce_difference_exact(P, P) == 0
    # uniform vs Porter-Thomas is 1 nat up to finite-size corrections
    assert abs(ver.ce_difference_exact(U, P) - 1) < 0.1
    assert math.isclose(ver.ce_difference_exact(U, P, bits=True), ver.ce_difference_exact(U, P) / math.log(2))
    x = inverse_cdf_sample(P, 20000, r)
    assert abs(ver.ce_difference(x, P)) < 4 * np.std(np.log(P[x])) / math.sqrt(x.size)
    assert ver.ce_difference([1], [1, 0]) == math.inf


def test_pinsker_chain_on_mixtures():
    r = make_rng(6)
    P = haar_target(10, r)
    U = np.full(P.size, 1 / P.size)
    for lam in (0.1, 0.5):
        Q = (1 - lam) * P + lam * U
        assert dist.tv_distance(Q, P) <= math.sqrt(ver.ce_difference_exact(Q, P) / 2)


def test_hog_examples():
    r = make_rng(7)
    P = haar_target(10, r)
    U = np.full(P.size, 1 / P.size)
    assert abs(ver.hog_fidelity_exact(U, P)) < 0.01
    heavy = P >= ver.lower_median(P)
    H = np.where(heavy, P, 0) / P[heavy].sum()
    assert math.isclose(ver.hog_fidelity_exact(H, P), 1 / math.log(2))
    assert abs(ver.hog_fidelity_exact(P, P) - 1) < 0.1
    x = inverse_cdf_sample(P, 20000, r)
    assert abs(ver.hog_fidelity(x, P) - ver.hog_fidelity_exact(P, P)) < 0.05
    assert ver.hog_check(x, P)
    assert not ver.hog_check(inverse_cdf_sample(U, 20000, r), P)


def test_bog_examples():
    r = make_rng(8)
    P = haar_target(10, r)
    assert ver.bog_distance_exact(P, P, 12) == 0
    x = inverse_cdf_sample(P, 10**5, r)
    assert ver.bog_distance(x, P, 12) < 0.05
    assert ver.bog_distance(x, P, 1) == 0


def test_bog_single_bin_flat_reference():
    P = dist.porter_thomas_fixture(64)
    bins = dist.pt_bin_index(P, 4, 64)
    x = np.flatnonzero(bins == 0)[:5]
    assert math.isclose(ver.bog_distance(x, P, 4, reference="flat"), 0.75)


# ---------------------------------------------------------------- row norms


def test_row_norm_examples():
    X = np.ones((4, 4))
    assert math.isclose(ver.row_norm(X), 1)
    assert math.isclose(ver.row_norm(np.eye(5)), 5.0**-5)


def test_row_norm_gap_importance_weighted():
    # E[|Perm|^2 / n! | row norms] = R*, so Pr_C[R>=1] - Pr_N[R>=1] = E_N|R-1| / 2
    r = make_rng(9)
    n, draws = 6, 5000
    X = [ver.gaussian_matrix(n, r) for _ in range(draws)]
    R = np.array([ver.row_norm(x) for x in X])
    w = np.array([abs(qc.permanent(x)) ** 2 for x in X]) / math.factorial(n)
    half_mean = 0.5 * np.mean(np.abs(R - 1))
    weighted = np.mean(w * (R >= 1)) - np.mean(R >= 1)
    assert abs(weighted - half_mean) < 4 * np.std(w * (R >= 1)) / math.sqrt(draws) + 0.02
    assert half_mean >= 0.146


def test_row_norm_discriminator_flags_scaled_rows():
    r = make_rng(10)
    flat = []
    for _ in range(10):
        g = ver.gaussian_matrix(4, r)
        flat.append(2 * g / np.linalg.norm(g, axis=1, keepdims=True))
    assert not ver.row_norm_discriminator(flat).accept
    wild = [np.diag([3.0, 1, 1, 1]) for _ in range(3)]
    assert ver.row_norm_discriminator(wild).accept


# ---------------------------------------------------------------- depolarization


def test_depolarization_examples():
    assert ver.depolarization_estimate(0.4, 8, 0.4) == 1
    assert ver.depolarization_estimate(0, 8, 0.4) == 0
    with pytest.raises(NumericalError):
        ver.depolarization_estimate(0.1, 8, 0)


def test_depolarization_recovers_mixture():
    r = make_rng(11)
    n, e = 8, 0.3
    P = haar_target(n, r)
    Q = (1 - e) * P + e / P.size
    moment = P.size * np.sum(P**2) - 1
    assert math.isclose(ver.depolarization_estimate(ver.xeb_fidelity_exact(Q, P), n, moment), 0.7)
    x = inverse_cdf_sample(Q, 50000, r)
    est = ver.depolarization_estimate(ver.xeb_fidelity(x, P), n, moment)
    assert abs(est - 0.7) < 4 * np.std(P.size * P[x]) / math.sqrt(x.size) / moment


# ---------------------------------------------------------------- X-programs


def test_xprogram_zero_angle():
    P = np.array([[1, 0, 1], [0, 1, 1]])
    assert ver.xprogram_bias(P, 0.0, [1, 1, 0]) == (1.0, 1.0)


def test_xprogram_single_row():
    s = np.array([1, 0, 1, 1])
    d, c = ver.xprogram_bias(s[None, :], math.pi / 8, s)
    assert math.isclose(d, math.cos(math.pi / 8) ** 2)
    assert math.isclose(c, d)
    assert abs(d - 0.854) < 1e-3


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(0, math.pi))
def test_xprogram_dual_formulas(k, n, seed, theta):
    r = make_rng(seed)
    P = r.integers(0, 2, size=(k, n))
    s = r.integers(0, 2, size=n)
    d, c = ver.xprogram_bias(P, theta, s)
    assert abs(d - c) < 1e-9


def test_xprogram_amplitudes_normalized():
    P = make_rng(12).integers(0, 2, size=(5, 4))
    assert math.isclose(np.sum(np.abs(ver.xprogram_amplitudes(P, 0.3)) ** 2), 1)
