import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from qworkbench import distributions as dist
from qworkbench import quantum_core as qc
from qworkbench.errors import ConfigError
from qworkbench.rng import make_rng


def test_pt_pdf_d2_is_flat():
    assert np.allclose(dist.porter_thomas_pdf(np.linspace(0, 1, 7), 2), 1)


def test_pt_moments_by_quadrature():
    D = 16
    m1 = integrate.quad(lambda p: p * dist.porter_thomas_pdf(p, D), 0, 1)[0]
    m2 = integrate.quad(lambda p: p * p * dist.porter_thomas_pdf(p, D), 0, 1)[0]
    assert abs(m1 - 1 / D) < 1e-10
    assert abs(m2 - 2 / (D * (D + 1))) < 1e-8


def test_pt_asymptotic_close_for_large_d():
    D = 4096
    p = np.linspace(0, 5 / D, 11)
    rel = dist.porter_thomas_pdf(p, D) / dist.porter_thomas_pdf_asymptotic(p, D)
    assert np.all(np.abs(rel - 1) < 0.01)


def test_bin_edges_are_equiprobable():
    D, m = 1024, 8
    e = dist.pt_bin_edges(m, D)
    w = np.diff(1 - np.exp(-D * np.where(np.isinf(e), np.inf, e)))
    assert np.allclose(w, 1 / m)


def test_anticonc_examples():
    assert dist.anticonc_fraction(np.full(8, 1 / 8)) == 1
    assert dist.anticonc_fraction([1, 0, 0, 0]) == 0.25
    assert abs(dist.anticonc_fraction(dist.porter_thomas_fixture(2**10)) - 1 / math.e) < 0.01
    with pytest.raises(ConfigError):
        dist.anticonc_fraction([1.0], alpha=0)


def test_tv_examples():
    p = np.array([0.3, 0.7])
    assert dist.tv_distance(p, p) == 0
    assert dist.tv_distance([1, 0], [0, 1]) == 1


def test_tv_to_pt_fixture_is_zero():
    assert dist.tv_to_porter_thomas(dist.porter_thomas_fixture(1000), 100) < 1e-12
    assert dist.tv_to_porter_thomas(dist.porter_thomas_fixture(2**12), 100) < 0.01


def test_tv_to_pt_point_mass():
    # all but one outcome sit in the lowest bin
    m = 4
    v = dist.tv_to_porter_thomas(np.eye(64)[0], m)
    assert math.isclose(v, 0.5 * ((63 / 64 - 1 / 4) + 2 / 4 + (1 / 4 - 1 / 64)))


def test_entropy_examples():
    assert dist.min_entropy(np.full(16, 1 / 16)) == 4
    assert dist.min_entropy([1, 0]) == 0
    assert math.isclose(dist.renyi_entropy(np.full(8, 1 / 8), 2), 3)
    assert dist.renyi_entropy([1, 0, 0], 2) == 0
    assert dist.renyi_entropy([0.5, 0.5], math.inf) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 10]))
def test_renyi_sandwich(seed, alpha):
    p = make_rng(seed).dirichlet(np.full(32, 0.5))
    h_a, h_inf = dist.renyi_entropy(p, alpha), dist.min_entropy(p)
    assert h_a >= h_inf - 1e-12
    assert h_inf >= (alpha - 1) / alpha * h_a - 1e-12


def test_iqp_min_entropy_tail_bound():
    r = make_rng(11)
    n, delta = 10, 0.1
    bound = dist.second_moment_min_entropy_bound(2**n * 3 * 2.0 ** (-2 * n), delta)
    assert math.isclose(bound, 0.5 * (n + math.log2(delta / 3)))
    hits = 0
    for _ in range(100):
        A = r.uniform(0, 2 * np.pi, size=(n, n))
        p = qc.born_distribution(qc.simulate(qc.iqp_circuit(qc.IQPWeights((A + A.T) / 2)))).probs
        hits += dist.min_entropy(p) >= bound
    assert hits >= 90


def test_second_moment_bound_examples():
    assert dist.second_moment_min_entropy_bound(1.0, 1.0) == 0
    n, e = 8, 0.1
    s = 2**n * 2 * (1 + e) / (2**n * (2**n + 1))
    assert math.isclose(dist.second_moment_min_entropy_bound(s, 0.05),
                        0.5 * (math.log2(0.05) - math.log2(s)))


def test_truncate_examples():
    t = dist.truncate(np.full(4, 0.25), 0)
    assert math.isclose(dist.l23_quasinorm(t), 3**1.5 / 4)
    assert dist.l23_quasinorm(dist.truncate([1, 0, 0, 0], 0)) == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 0.5))
def test_truncate_invariants(seed, eps):
    p = make_rng(seed).dirichlet(np.ones(64))
    t = dist.truncate(p, eps)
    assert t.removed_weight <= eps + 1e-12
    assert math.isclose(p[t.removed].sum(), t.removed_weight, abs_tol=1e-12)
    assert np.allclose(t.restore(), p)
    kept = np.setdiff1d(np.arange(64), np.append(t.removed, t.max_index))
    # only the removed entries and the max are zeroed
    assert np.allclose(t.values[kept], p[kept])


def test_truncate_ties_stable():
    t = dist.truncate(np.array([0.1, 0.1, 0.1, 0.7]), 0.15)
    assert list(t.removed) == [0]


def test_quasinorm_lower_bound_random():
    r = make_rng(5)
    for _ in range(100):
        p = r.dirichlet(np.full(2**10, r.uniform(0.2, 3)))
        eps = r.uniform(0, 0.3)
        q = dist.l23_quasinorm(dist.truncate(p, eps))
        assert q >= dist.quasinorm_lower_bound(dist.min_entropy(p), eps) - 1e-9


def test_vv_bounds_uniform_scaling():
    eps = 0.1
    ns = np.arange(6, 13)
    lows = [dist.vv_sample_bounds(np.full(2**n, 2.0**-n), eps).lower for n in ns]
    slope = np.polyfit(ns, np.log2(lows), 1)[0]
    assert abs(slope - 0.5) < 0.05


def test_vv_bounds_support_and_point_mass():
    eps, s = 0.2, 256
    p = np.zeros(1024)
    p[:s] = 1 / s
    b = dist.vv_sample_bounds(p, eps)
    assert b.upper <= (1 - eps / 16) * math.sqrt(s) / eps**2
    assert b.up_to_constant
    pm = dist.vv_sample_bounds(np.eye(8)[3], eps)
    assert pm.lower == pm.upper == 1 / eps


def test_supremacy_tradeoff():
    g = 1 / math.e
    eps, frac = dist.supremacy_tradeoff(g, g / 2)
    assert abs(eps - 1 / 22) < 0.002 and abs(frac - 0.30) < 0.01
    eps, frac = dist.supremacy_tradeoff(g, 4 / 5)
    assert eps == 0.2 and abs(frac - 0.07) < 0.005
    assert math.isclose(dist.supremacy_tradeoff(g, 1e-9)[1], g, rel_tol=1e-6)


def test_anticonc_concentrates_with_dimension():
    r = make_rng(9)
    spreads = []
    for D in (2**6, 2**10):
        fr = []
        for _ in range(50):
            w = r.exponential(size=D)
            fr.append(dist.anticonc_fraction(w / w.sum()))
        spreads.append(np.var(fr))
    assert spreads[1] < spreads[0]


def test_sample_set_validation():
    s = dist.SampleSet(4, [0, 1, 1, 3])
    assert list(s.counts) == [1, 2, 0, 1]
    with pytest.raises(ConfigError):
        dist.SampleSet(2, [2])
