import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hessianlab import conelab as cl
from hessianlab.symmcalc import Spectrum, esf, sigma
from oracles import rejection_gamma, sigma_enum, sigma_excl_enum


def _case(lam, xi, k, K=None, eps0=0.1, A=1.0):
    K = cl.default_K(k) if K is None else K
    return cl.InequalityCase(Spectrum(np.asarray(lam, float)), xi, k, K, eps0, A)


def key_terms_oracle(lam, xi, k, K, eps0):
    n = len(lam)
    sk = sigma_enum(lam, k)
    f = [sigma_excl_enum(lam, k - 1, i) for i in range(n)]
    t1 = 0.0
    for p in range(n):
        for q in range(n):
            if p != q:
                t1 -= sigma_excl_enum(lam, k - 2, p, q) * (xi[p] * np.conj(xi[q])).real
    t1 /= sk
    t2 = K * abs(sum(f[p] * xi[p] for p in range(n))) ** 2 / sk ** 2
    t3 = (1 - eps0) * sum(f[i] * abs(xi[i]) ** 2 for i in range(1, n)) / (lam[0] * sk)
    rhs = (1 - eps0) * f[0] * abs(xi[0]) ** 2 / (lam[0] * sk)
    return t1, t2, t3, rhs


def _random_case(seed, n=4, k=2):
    rng = np.random.default_rng(seed)
    lam = rejection_gamma(rng, n, k, 1)[0]
    lam = np.maximum(lam, -0.9)
    if not all(sigma_enum(lam, j) > 0 for j in range(1, k + 1)):
        lam = np.abs(lam) + 0.1
    lam = np.sort(lam)[::-1]
    xi = rng.normal(size=n) + 1j * rng.normal(size=n)
    return lam, xi


# -- constraints and sampling -------------------------------------------------

def test_constraints_validation():
    with pytest.raises(ValueError):
        cl.ConeConstraints(3, 4)
    with pytest.raises(ValueError):
        cl.ConeConstraints(3, 2, A=0.0)
    with pytest.raises(ValueError):
        cl.ConeConstraints(3, 2, sigma_band=(2.0, 1.0))


def test_sampler_degenerate_band():
    cons = cl.ConeConstraints(3, 2, 1.0, (1.0, 1.0))
    out = cl.sample_gamma_k(cons, 300, seed=3)
    lam = np.array([s.values for s in out])
    assert len(out) == 300
    assert np.all(np.abs(sigma(lam, 2) - 1) <= 1e-9)
    assert np.all(lam.sum(axis=1) > 0)
    assert np.all(lam[:, -1] > -1)


def test_sampler_count_zero_and_determinism():
    cons = cl.ConeConstraints(4, 3)
    assert cl.sample_gamma_k(cons, 0, seed=1) == []
    a = cl.sample_gamma_k_array(cons, 200, seed=5)
    b = cl.sample_gamma_k_array(cons, 200, seed=5)
    c = cl.sample_gamma_k_array(cons, 200, seed=6)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("n,k", [(3, 2), (4, 2), (4, 3), (5, 3)])
def test_sampler_respects_constraints(n, k):
    cons = cl.ConeConstraints(n, k)
    lam = cl.sample_gamma_k_array(cons, 500, seed=0)
    assert np.all(cons.admissible(lam))
    assert np.all(np.diff(lam, axis=1) <= 0)


def test_sampler_pinned_lambda1():
    cons = cl.ConeConstraints(4, 2)
    lam = cl.sample_gamma_k_array(cons, 200, seed=0, lambda1=7.5)
    assert np.all(lam[:, 0] == 7.5)
    assert np.all(cons.admissible(lam))


def test_sample_above_floor():
    cons = cl.ConeConstraints(3, 2)
    lam = cl.sample_above(cons, 2.0, 250, seed=1)
    assert lam.shape == (250, 3)
    assert np.all(lam[:, 0] >= 2.0)
    assert np.all(cons.admissible(lam))


def test_case_validation():
    with pytest.raises(ValueError):
        _case([1.0, -2.0], [1, 0], 2)  # outside Gamma_2
    with pytest.raises(ValueError):
        _case([5.0, 1.0, -1.5], [1, 0, 0], 2)  # below -A
    with pytest.raises(ValueError):
        _case([2.0, 1.0], [1, 0, 0], 2)
    with pytest.raises(ValueError):
        _case([2.0, 1.0], [1, 0], 2, eps0=1.0)


# -- key inequality -----------------------------------------------------------

def test_key_margin_zero_xi():
    r = cl.key_margin(_case([3.0, 1.0, 0.5], np.zeros(3), 2))
    assert (r.t1, r.t2, r.t3, r.rhs, r.margin) == (0, 0, 0, 0, 0)


def test_key_margin_first_slot_closed_form():
    lam = np.array([4.0, 1.5, 0.5, -0.7])
    k, K, e = 2, 9.0, 0.1
    r = cl.key_margin(_case(lam, [1, 0, 0, 0], k, K, e))
    sk = sigma_enum(lam, k)
    f1 = sigma_excl_enum(lam, k - 1, 0)
    expect = K * f1 ** 2 / sk ** 2 - (1 - e) * f1 / (lam[0] * sk)
    assert r.t1 == 0 and r.t3 == 0
    assert math.isclose(r.margin, expect, rel_tol=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([(3, 2), (4, 2), (4, 3), (5, 3)]),
       st.sampled_from([0.1, 0.5]))
def test_key_terms_match_oracle(seed, nk, eps0):
    n, k = nk
    lam, xi = _random_case(seed, n, k)
    K = cl.default_K(k)
    r = cl.key_margin(_case(lam, xi, k, K, eps0))
    o = key_terms_oracle(lam, xi, k, K, eps0)
    scale = sum(abs(v) for v in o) + 1e-300
    for got, want in zip((r.t1, r.t2, r.t3, r.rhs), o):
        assert abs(got - want) <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-5, 5), st.floats(-5, 5))
def test_xi_scaling_homogeneity(seed, cr, ci):
    lam, xi = _random_case(seed)
    c = complex(cr, ci)
    m1 = cl.key_margin(_case(lam, xi, 2)).margin
    m2 = cl.key_margin(_case(lam, c * xi, 2)).margin
    scale = cl.key_margin_batch(lam, xi, 2, 9.0, 0.1)[1]
    assert abs(m2 - abs(c) ** 2 * m1) <= 1e-13 * abs(c) ** 2 * scale


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_imag_residue_bound(seed):
    lam, xi = _random_case(seed, 5, 3)
    r = cl.key_margin(_case(lam, xi, 3))
    assert r.imag_residue <= 1e-12 * (abs(r.t1) + abs(r.t2) + abs(r.t3) + abs(r.rhs) + 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([(3, 2), (4, 2), (4, 3), (5, 3)]))
def test_tail_supported_xi(seed, nk):
    n, k = nk
    lam, xi = _random_case(seed, n, k)
    xi[0] = 0
    r = cl.key_margin(_case(lam, xi, k))
    assert r.rhs == 0
    assert r.t3 >= 0


def test_key_form_matrix_and_worst_xi():
    rng = np.random.default_rng(2)
    lam = cl.sample_gamma_k_array(cl.ConeConstraints(4, 2), 50, seed=2)
    M = cl.key_form_matrix(lam, 2, 9.0, 0.1)
    xi = cl.random_unit_complex(rng, 50, 4)
    direct = cl.key_margin_batch(lam, xi, 2, 9.0, 0.1)[0]
    quad = np.real(np.einsum("bi,bij,bj->b", np.conj(xi), M, xi))
    assert np.allclose(direct, quad, rtol=1e-12, atol=1e-12)
    w = cl.worst_xi(lam, 2, 9.0, 0.1)
    mw = cl.key_margin_batch(lam, w, 2, 9.0, 0.1)[0]
    assert np.all(mw <= direct + 1e-12)


def test_key_margin_rejects_nonpositive_sigma():
    with pytest.raises(ValueError):
        cl.InequalityCase(Spectrum([1.0, -1.0]), [1, 0], 2, 9.0, 0.1)


# -- comparison inequalities --------------------------------------------------

def lu_oracle(lam, xi, k, delta0, eps, l):
    n = len(lam)
    sk = sigma_enum(lam, k)
    s = 0.0
    for p in range(n):
        for q in range(n):
            if p != q:
                s -= sigma_excl_enum(lam, k - 2, p, q) * xi[p] * xi[q]
    s += sum(sigma_excl_enum(lam, k - 1, i) * xi[i] for i in range(n)) ** 2 / sk
    s += delta0 * sum(sigma_excl_enum(lam, k - 1, i) * xi[i] ** 2 for i in range(l, n)) / lam[0]
    return s - (1 - eps) * sk * xi[0] ** 2 / lam[0] ** 2


def zhang_oracle(lam, xi, k, K, A, delta0):
    n = len(lam)
    sk = sigma_enum(lam, k)
    s = 0.0
    for p in range(n):
        for q in range(n):
            if p != q:
                s -= sigma_excl_enum(lam, k - 2, p, q) * xi[p] * xi[q]
    s += K * sum(sigma_excl_enum(lam, k - 1, i) * xi[i] for i in range(n)) ** 2 / sk
    s += 2 * sum(sigma_excl_enum(lam, k - 1, i) * xi[i] ** 2 for i in range(1, n)) / (lam[0] + A + 1)
    return s - (1 + delta0) * sigma_excl_enum(lam, k - 1, 0) * xi[0] ** 2 / lam[0]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([(3, 2), (4, 3), (5, 3)]))
def test_lu_and_zhang_match_oracles(seed, nk):
    n, k = nk
    lam, xi = _random_case(seed, n, k)
    x = xi.real
    got = cl.lu_margin(lam, x, k, 0.2, 0.1, 1)
    want = lu_oracle(lam, x, k, 0.2, 0.1, 1)
    assert abs(got - want) <= 1e-11 * (1 + abs(want))
    got = cl.zhang_margin(lam, x, k, 9.0, 1.0, 0.2)
    want = zhang_oracle(lam, x, k, 9.0, 1.0, 0.2)
    assert abs(got - want) <= 1e-11 * (1 + abs(want))


def test_comparison_margins_zero_xi_and_real_only():
    lam = np.array([3.0, 1.0, 0.2])
    assert cl.lu_margin(lam, np.zeros(3), 2, 0.1, 0.1, 1) == 0
    assert cl.zhang_margin(lam, np.zeros(3), 2, 9.0, 1.0, 0.1) == 0
    with pytest.raises(ValueError):
        cl.lu_margin(lam, np.array([1j, 0, 0]), 2, 0.1, 0.1, 1)


def test_lu_equal_pair_large_t_recorded():
    # k = n = 2, lam = (t, t), xi = e1: only the sign is of interest
    for t in (10.0, 1e3, 1e5):
        m = cl.lu_margin(np.array([t, t]), np.array([1.0, 0.0]), 2, 0.1, 0.1, 1)
        assert math.isfinite(m)


def test_zhang_factor_two_on_second_slot():
    lam = np.array([5.0, 2.0, -0.5])
    k, K, A = 2, 9.0, 1.0
    e2 = np.array([0.0, 1.0, 0.0])
    sk = sigma_enum(lam, k)
    f2 = sigma_excl_enum(lam, k - 1, 1)
    z = cl.zhang_margin(lam, e2, k, K, A, 0.3)
    assert math.isclose(z - K * f2 ** 2 / sk, 2 * f2 / (lam[0] + A + 1), rel_tol=1e-12)
    for eps0 in (0.1, 0.5):
        r = cl.key_margin(_case(lam, e2, k, K, eps0))
        assert math.isclose(r.t3, (1 - eps0) * f2 / (lam[0] * sk), rel_tol=1e-12)


# -- intermediate estimate ----------------------------------------------------

def test_iqc0_coefficient_exact():
    assert Fraction(cl.iqc0_coefficient(2)).limit_denominator(1000) == Fraction(16, 15)
    assert math.isclose(cl.iqc0_coefficient(3), 25 / 24)


def test_iqc0_rejects_k1_and_negative_c():
    with pytest.raises(ValueError):
        cl.iqc0_margin(_case([2.0, 1.0], [1, 0], 1), 1.0)
    with pytest.raises(ValueError):
        cl.iqc0_margin(_case([2.0, 1.0], [1, 0], 2), -1.0)


def test_iqc0_zero_xi():
    assert cl.iqc0_margin(_case([3.0, 1.0, 0.5], np.zeros(3), 2), 2.0) == 0


def test_iqc0_constant_by_bisection_matches_closed_form():
    cons = cl.ConeConstraints(3, 2)
    rng = np.random.default_rng(0)
    lam = cl.sample_above(cons, 3.0, 200, seed=0)
    xi = cl.random_unit_complex(rng, len(lam), 3)
    cases = [_case(l, x, 2) for l, x in zip(lam, xi)]
    C_closed = cl.iqc0_required_constant(cases)
    assert math.isfinite(C_closed)

    def ok(C):
        return all(cl.iqc0_margin(c, C) >= -1e-12 for c in cases)

    lo, hi = 0.0, 1.0
    while not ok(hi):
        hi *= 2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    assert abs(hi - C_closed) <= 1e-6 * max(1.0, C_closed)


# -- algebraic fact -----------------------------------------------------------

def test_algebraic_fact_examples():
    f = cl.algebraic_fact(0.5, -1 / 3)
    assert math.isclose(f.value, 1 / 3, rel_tol=1e-15)
    assert math.isclose(f.lower_bound, 1 / 3, rel_tol=1e-15)
    assert cl.algebraic_fact(0.3, 0.0).value == pytest.approx(0.7)


def test_algebraic_fact_grid():
    a = np.arange(-10_000, 10_001) * 1e-3
    for eps0 in np.arange(1, 100) * 0.01:
        f = cl.algebraic_fact(eps0, a)
        assert f.value.min() >= f.lower_bound - 1e-12
        m = cl.algebraic_fact(eps0, cl.algebraic_minimizer(eps0))
        assert abs(m.value - m.lower_bound) <= 1e-9


@given(st.floats(0.001, 0.999), st.floats(-1e6, 1e6))
def test_algebraic_fact_property(eps0, a):
    f = cl.algebraic_fact(eps0, a)
    assert f.value >= f.lower_bound - 1e-12 * max(1.0, f.value)


# -- searches -----------------------------------------------------------------

def test_threshold_search_deterministic():
    cons = cl.ConeConstraints(3, 2)
    a = cl.threshold_search(cons, 0.5, samples_per_level=300, seed=4, anneal_restarts=30)
    b = cl.threshold_search(cons, 0.5, samples_per_level=300, seed=4, anneal_restarts=30)
    assert a.lambda1_star == b.lambda1_star
    assert a.levels_tested == b.levels_tested
    assert a.lambda1_star > 0


def test_threshold_retest_with_fresh_seeds():
    cons = cl.ConeConstraints(3, 2)
    res = cl.threshold_search(cons, 0.1, samples_per_level=500, seed=1, anneal_restarts=50)
    L = res.lambda1_star
    clean = 0
    batches = 20
    for i in range(batches):
        v, _ = cl.level_violations(cons, 0.1, 9.0, L, 500, 10_000 + i)
        clean += v == 0
    assert clean >= 0.99 * batches


def test_violation_frequency_drops_with_level():
    cons = cl.ConeConstraints(4, 2)
    res = cl.threshold_search(cons, 0.1, samples_per_level=500, seed=3, anneal_restarts=50)
    L = res.lambda1_star
    assert L / 4 > 1.0  # the quarter level is feasible for this band

    def freq(level):
        v, _ = cl.level_violations(cons, 0.1, 9.0, level, 3000, 99, xi_mode="worst")
        return v / 3000

    assert freq(L / 4) >= freq(L)
    # violations are not monotone in lam_1, so also compare whole windows below and above L
    below = cl.sample_above(cons, L / 4, 4000, seed=5, levels=12)
    below = below[below[:, 0] < L]
    above = cl.sample_above(cons, L, 4000, seed=5, levels=12)
    w_below = cl.key_margin_batch(below, cl.worst_xi(below, 2, 9.0, 0.1), 2, 9.0, 0.1)[0]
    w_above = cl.key_margin_batch(above, cl.worst_xi(above, 2, 9.0, 0.1), 2, 9.0, 0.1)[0]
    assert np.mean(w_below < -cl.MARGIN_TOL) > np.mean(w_above < -cl.MARGIN_TOL) == 0


def test_counterexample_search_without_restarts():
    cons = cl.ConeConstraints(3, 2)
    out = cl.counterexample_search(cons, 0.5, None, 2.0, 0, seed=3, init_samples=32)
    assert out.evaluations == 32
    r = cl.key_margin(out.worst_case)
    assert abs(r.margin - out.worst_margin) <= 1e-12 * max(1.0, abs(r.margin))


def test_counterexample_search_reevaluates():
    cons = cl.ConeConstraints(4, 2)
    out = cl.counterexample_search(cons, 0.1, None, 1.5, 40, seed=2, steps=40)
    r = cl.key_margin(out.worst_case)
    assert abs(r.margin - out.worst_margin) <= 1e-12 * max(1.0, abs(r.margin))
    assert out.worst_case.spectrum.values[0] >= 1.5
    again = cl.counterexample_search(cons, 0.1, None, 1.5, 40, seed=2, steps=40)
    assert again.worst_margin == out.worst_margin


def test_low_floor_finds_violations():
    # far below the located level the estimate fails, which is what makes the threshold meaningful
    cons = cl.ConeConstraints(4, 2)
    out = cl.counterexample_search(cons, 0.1, None, 1.0, 200, seed=0, steps=100)
    assert out.worst_margin < 0


# -- semi-convexity probe -----------------------------------------------------

def test_probe_count_zero():
    r = cl.semiconvex_probe(3, 2, 1.0, 2.0, 0, seed=0)
    assert r.count == 0 and r.min_lambda_n is None


def test_probe_respects_constraints():
    r = cl.semiconvex_probe(4, 2, 0.5, 2.0, 400, seed=1)
    e = esf(r.samples, 3)
    assert np.all(e[:, 1] > 0) and np.all(e[:, 2] > 0)
    assert np.all(e[:, 3] > -0.5)
    assert np.all(e[:, 2] <= 2.0)
    assert r.min_lambda_n > -np.inf


def test_probe_doubling_a_trend():
    lower = 0
    pairs = 6
    for seed in range(pairs):
        a = cl.semiconvex_probe(3, 2, 0.5, 2.0, 1500, seed=seed).min_lambda_n
        b = cl.semiconvex_probe(3, 2, 1.0, 2.0, 1500, seed=seed).min_lambda_n
        lower += b <= a
    assert lower >= pairs - 1
