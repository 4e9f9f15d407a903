import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import null_space
from scipy.optimize import minimize

from amac.channels import sphere_packing_exponent, xor_mac, z_channel
from amac.errors import DomainError, UsageError
from amac.patterns import (ExponentQuery, beta_coefficients, best_worst_delay, betas_from_sets,
                           e_k, envelope_exponent, exact_r_sup, general_pattern_exponent,
                           irreducible_sets, pattern_exponent, rate_sweep)
from amac.probability import divergence, info_term


@pytest.fixture(scope="module")
def query(study):
    return ExponentQuery(0.5, study["p"], study["p"], study["w"], 0.0, 0.0)


def test_beta_examples():
    for alpha in (0.0, 0.3, 1.0):
        assert beta_coefficients(1, 1, alpha).as_tuple() == (1, 0, 0)
        assert beta_coefficients(5, 1, alpha).as_tuple() == (1, 0, 2)
    assert beta_coefficients(2, 2, 0.5).as_tuple() == (0.5, 0.5, 0.5)
    with pytest.raises(DomainError):
        beta_coefficients(0, 1, 0.5)
    with pytest.raises(DomainError):
        beta_coefficients(2, 3, 0.5)


@given(st.integers(1, 60), st.sampled_from([1, 2]), st.floats(0, 1))
def test_beta_total_weight(L, j, alpha):
    b = beta_coefficients(L, j, alpha)
    # the weights add up to the relative length of the L + 1 covered subblocks
    k0 = 1 if j == 1 else 2
    assert b.b1 + b.b2 + b.b12 == pytest.approx(sum(e_k(k, alpha) for k in range(k0, k0 + L + 1)),
                                                abs=1e-12)


@given(st.integers(1, 30), st.integers(1, 30), st.floats(0, 1))
def test_irreducible_sets_reproduce_betas(k0, L, alpha):
    s1, s2, s12, j = irreducible_sets(k0, L)
    got = betas_from_sets(s1, s2, s12, alpha).as_tuple()
    assert np.allclose(got, beta_coefficients(L, j, alpha).as_tuple(), atol=1e-12)


def test_seven_block_example_sets():
    alpha = 0.3
    b = betas_from_sets({3}, {5, 6, 9}, {4, 7, 8}, alpha)
    assert b.b1 == e_k(3, alpha)
    assert b.b2 == pytest.approx(e_k(5, alpha) + e_k(6, alpha) + e_k(9, alpha))
    assert b.b12 == pytest.approx(e_k(4, alpha) + e_k(7, alpha) + e_k(8, alpha))
    assert betas_from_sets({1}, set(), set(), alpha).as_tuple() == (1 - alpha, 0, 0)
    with pytest.raises(DomainError):
        betas_from_sets({1}, {1}, set(), alpha)


def test_zero_rate_exponent_positive(query):
    for L in (1, 2, 3):
        assert pattern_exponent(query.at(L=L)) > 0


@settings(max_examples=10)
@given(st.integers(0, 10).map(lambda k: 2 * k + 1), st.floats(0, 0.45))
def test_odd_patterns_ignore_alpha(query, L, r):
    a = pattern_exponent(query.at(L=L, alpha=0.2, r1=r, r2=r))
    b = pattern_exponent(query.at(L=L, alpha=0.9, r1=r, r2=r))
    assert a == pytest.approx(b, abs=1e-9)


def test_query_validation(query):
    with pytest.raises(DomainError):
        query.at(r1=-0.1)
    with pytest.raises(DomainError):
        query.at(alpha=1.5)


@settings(max_examples=10)
@given(st.integers(1, 12), st.integers(1, 12), st.floats(0, 1), st.floats(0, 0.4))
def test_general_matches_irreducible(study, k0, L, alpha, r):
    s1, s2, s12, j = irreducible_sets(k0, L)
    g = general_pattern_exponent(s1, s2, s12, alpha, study["p"], study["p"], study["w"], r, r, K=13)
    q = ExponentQuery(alpha, study["p"], study["p"], study["w"], r, r, L, j)
    assert g == pytest.approx(pattern_exponent(q), abs=1e-9)


def two_distribution_form(P, px, py, L, R, starts=6, seed=0):
    """Independent evaluation of the joint (V1, V12) form with a generic NLP solver."""
    supp = np.flatnonzero(P.ravel() > 0)
    xs, ys, _ = np.unravel_index(supp, P.shape)
    a = np.zeros((4, supp.size))
    a[xs, np.arange(supp.size)] = 1
    a[2 + ys, np.arange(supp.size)] = 1
    basis = null_space(a)
    v0 = P.ravel()[supp]
    k = basis.shape[1]
    c = (L - 1) / 2

    def full(th):
        v = np.zeros(P.size)
        v[supp] = np.clip(v0 + basis @ th, 0, None)
        return v.reshape(P.shape)

    def obj(x):
        return divergence(full(x[:k]), P) + c * divergence(full(x[k:2 * k]), P) + x[-1]

    cons = [{"type": "ineq", "fun": lambda x: x[-1] - (info_term(full(x[:k]), 1)
                                                       + c * info_term(full(x[k:2 * k]), 12) - L * R)},
            {"type": "ineq", "fun": lambda x: np.concatenate([v0 + basis @ x[:k], v0 + basis @ x[k:2 * k]])},
            {"type": "ineq", "fun": lambda x: x[-1:]}]
    rng = np.random.default_rng(seed)
    best = np.inf
    for s in range(starts):
        x0 = np.concatenate([0.05 * rng.normal(size=2 * k) * (s > 0), [1.0]])
        while np.any(v0 + basis @ x0[:k] < 0) or np.any(v0 + basis @ x0[k:2 * k] < 0):
            x0[:2 * k] *= 0.5
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = minimize(obj, x0, method="SLSQP", constraints=cons,
                           options={"ftol": 1e-13, "maxiter": 2000})
        if res.success:
            best = min(best, res.fun)
    return best


@pytest.mark.parametrize("L", [1, 2, 3, 8, 40])
@pytest.mark.parametrize("R", [0.0, 0.2, 0.37])
def test_two_distribution_form(study, query, L, R):
    ours = [pattern_exponent(query.at(L=L, j=j, r1=R, r2=R)) for j in (1, 2)]
    assert ours[0] == pytest.approx(ours[1], abs=1e-9)
    ref = two_distribution_form(study["P"], study["p"], study["p"], L, R)
    assert ours[0] == pytest.approx(ref, abs=2e-3)


def test_envelope_definition(query):
    q = query.at(r1=0.3, r2=0.3)
    env = envelope_exponent(q, 1)
    assert env.value == min(pattern_exponent(q.at(L=1, j=j)) for j in (1, 2))
    assert env.dominant == (1, 1)
    env6 = envelope_exponent(q, 6)
    assert env6.value == pytest.approx(min(pattern_exponent(q.at(L=L, j=j))
                                           for L in range(1, 7) for j in (1, 2)), abs=1e-12)
    assert env6.value == env6.per_pattern[env6.dominant].exponent
    with pytest.raises(DomainError):
        envelope_exponent(q, 0)


def test_zero_rate_shortcut(query):
    env = envelope_exponent(query, 10, zero_rate_shortcut=True)
    assert list(env.per_pattern) == [(1, 1)]


def test_short_sweep(query):
    sw = rate_sweep(query, np.arange(0, 0.5, 0.01), M=6, K=6)
    assert np.all(np.diff(sw.exponents) <= 1e-9)
    assert sw.rates[sw.last_positive_index()] < sw.r_sup_exact <= sw.rates[sw.last_positive_index() + 1]
    assert abs(sw.r_sup - sw.r_sup_exact) <= 0.01
    assert sw.r_sup_effective == pytest.approx(sw.r_sup * 5 / 6)
    with pytest.raises(UsageError):
        rate_sweep(query, [0.2, 0.1], M=2)


def test_exact_r_sup_formula(study, query):
    # the long patterns bind: (I^1 + (M-1)/2 I^12) / M for odd M
    i1, i12 = info_term(study["P"], 1), info_term(study["P"], 12)
    assert exact_r_sup(query, 41) == pytest.approx((i1 + 20 * i12) / 41, abs=1e-12)


def test_delay_bounds_useless_channel(study):
    w = np.broadcast_to([0.5, 0.5], (2, 2, 2))
    q = ExponentQuery(0.5, study["p"], study["p"], w, 0.1, 0.1)
    b = best_worst_delay(q, 3, alpha_step=0.25)
    assert b.worst == 0 and b.best == 0


def test_delay_bounds_order_and_sync(study, query):
    K, rate = 4, 0.3
    b = best_worst_delay(query.at(r1=rate, r2=rate), K, alpha_step=0.1)
    assert b.best >= b.worst
    assert b.best >= envelope_exponent(query.at(r1=rate, r2=rate, alpha=0.5), K).value - 1e-12
    assert b.best > sphere_packing_exponent(study["w1"], 2 * rate * (1 - 1 / K))


def test_subpattern_order_probe():
    """Compare E(S') with E(S) for S' below S; the order is not assumed, only reported."""
    from amac.checks import random_instance
    rng = np.random.default_rng(0)
    above = total = 0
    for _ in range(60):
        px, py, w, _ = random_instance(rng)
        K, alpha = 4, rng.uniform()
        lab = rng.integers(0, 4, size=2 * K)
        S = [set(np.flatnonzero(lab == c) + 1) for c in (1, 2, 3)]
        Sp = [{k for k in s if rng.uniform() < 0.5} for s in S]
        if not any(Sp) or Sp == S:
            continue
        r1, r2 = rng.uniform(0, 0.6, size=2)
        e = general_pattern_exponent(*S, alpha, px, py, w, r1, r2, K)
        ep = general_pattern_exponent(*Sp, alpha, px, py, w, r1, r2, K)
        assert e >= 0 and ep >= 0
        total += 1
        above += ep > e + 1e-9
    print(f"sub-pattern probe: E(S') > E(S) in {above}/{total} random pairs")
    assert total > 30
