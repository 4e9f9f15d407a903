import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from amac.channels import xor_mac, z_channel
from amac.errors import DimensionError, DomainError
from amac.probability import (INF, Dist, Joint2, compose, conditional_entropy,
                              couple_to_marginals, divergence, entropy,
                              extend_coupling_to_channel, info_term, marginal, multi_information,
                              mutual_information, product, variational_distance)


def simplex(n, min_value=0.0):
    return arrays(float, n, elements=st.floats(min_value, 1.0)).filter(
        lambda a: a.sum() > 1e-3).map(lambda a: a / a.sum())


def joints(shape):
    return simplex(int(np.prod(shape))).map(lambda a: a.reshape(shape))


def test_entropy_examples():
    assert entropy([0.5, 0.5]) == 1.0
    assert entropy([1.0, 0.0]) == 0.0


def test_entropy_matches_high_precision():
    getcontext().prec = 50
    p = [Decimal("0.351746"), Decimal("0.648254")]
    ref = -sum(x * x.ln() for x in p) / Decimal(2).ln()
    assert abs(entropy([0.351746, 0.648254]) - float(ref)) < 1e-14


def test_divergence_examples():
    assert divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0, abs=1e-15)
    assert divergence([0.5, 0.5], [1.0, 0.0]) == INF


def test_variational_distance_examples():
    assert variational_distance([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert variational_distance([1, 0], [0, 1]) == 2.0
    assert variational_distance([0.6, 0.4], [0.5, 0.5]) == pytest.approx(0.2)


def test_dist_validation():
    with pytest.raises(DomainError):
        Dist([0.5, 0.6])
    with pytest.raises(DomainError):
        Dist([-0.1, 1.1])
    with pytest.raises(DimensionError):
        divergence([0.5, 0.5], [1 / 3, 1 / 3, 1 / 3])


def test_compose_noiseless_xor():
    v = product([0.5, 0.5], [0.5, 0.5])
    p = compose(v, xor_mac(z_channel(0.0)).matrix)
    for x in range(2):
        for y in range(2):
            assert p[x, y, x ^ y] == pytest.approx(0.25)


def test_study_output_law(study):
    p, q, w1 = study["P"], study["q"], study["w1"]
    z_direct = p.sum(axis=(0, 1))
    z_via_q = q.probs @ w1.matrix
    assert np.allclose(z_direct, z_via_q, atol=1e-9)


def test_multi_information_examples(study):
    assert multi_information(product([0.3, 0.7], [0.6, 0.4])) == pytest.approx(0.0, abs=1e-15)
    assert multi_information(np.array([[0.5, 0.0], [0.0, 0.5]])) == pytest.approx(1.0)
    assert info_term(study["P"], 12) == pytest.approx(0.761167, abs=1e-4)


def test_couple_to_marginals_examples():
    v = np.array([[0.1, 0.3], [0.2, 0.4]])
    assert np.allclose(couple_to_marginals(v, v.sum(1), v.sum(0)), v)
    u = np.full((2, 2), 0.25)
    out = couple_to_marginals(u, [0.75, 0.25], [0.5, 0.5])
    assert np.allclose(out.sum(1), [0.75, 0.25]) and np.allclose(out.sum(0), [0.5, 0.5])
    assert variational_distance(out, u) <= 0.5 + 1e-12


def test_extend_coupling_examples():
    rng = np.random.default_rng(3)
    w = rng.dirichlet(np.ones(2), size=(2, 2))
    v = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
    out = extend_coupling_to_channel(v, v.sum(2), w)
    assert np.allclose(out, v)
    # a cell below the threshold takes the channel row
    v = np.array([[[0.3, 0.2], [0.2, 0.1]], [[0.1, 0.05], [0.002, 0.048]]])
    v = v / v.sum()
    vxy = v.sum(2)
    hat = vxy.copy()
    hat[0, 0] -= 0.004
    hat[1, 1] += 0.004
    out = extend_coupling_to_channel(v, hat, w)
    assert np.allclose(out[1, 1] / out[1, 1].sum(), w[1, 1])
    assert np.allclose(out.sum(2), hat)
    with pytest.raises(DomainError):
        extend_coupling_to_channel(v, np.array([[0.5, 0.0], [0.0, 0.5]]), w)


@given(joints((2, 3, 2)))
def test_entropy_chain_rule(v):
    h = entropy(v)
    assert h == pytest.approx(entropy(marginal(v, (0,))) + conditional_entropy(v, [1, 2], [0]),
                              abs=1e-10)


@given(joints((3, 2)))
def test_two_way_multi_information(v):
    direct = entropy(v.sum(1)) + entropy(v.sum(0)) - entropy(v)
    assert multi_information(v) == pytest.approx(direct, abs=1e-12)
    assert mutual_information(v, [0], [1]) == pytest.approx(direct, abs=1e-12)


@given(joints((2, 2, 3)))
def test_multi_information_decomposition(v):
    full = multi_information(v)
    assert full == pytest.approx(mutual_information(v, [0], [1, 2]) + mutual_information(v, [1], [2]),
                                 abs=1e-10)
    assert full == pytest.approx(mutual_information(v, [1], [0, 2]) + mutual_information(v, [0], [2]),
                                 abs=1e-10)


@given(simplex(4), simplex(4, min_value=1e-3))
def test_pinsker(p, q):
    d = divergence(p, q)
    assert variational_distance(p, q) <= math.sqrt(2 * math.log(2) * d) + 1e-9


@given(simplex(3), simplex(3))
def test_divergence_nonnegative(p, q):
    assert divergence(p, q) >= 0


@given(joints((3, 3)), simplex(3), simplex(3))
def test_couple_to_marginals_bound(v, px, py):
    out = couple_to_marginals(v, px, py)
    assert np.allclose(out.sum(1), px, atol=1e-12) and np.allclose(out.sum(0), py, atol=1e-12)
    bound = variational_distance(px, v.sum(1)) + variational_distance(py, v.sum(0))
    assert variational_distance(out, v) <= bound + 1e-12
    assert out.min() >= 0


def test_joint_types_validate():
    with pytest.raises(DimensionError):
        Joint2(np.array([0.5, 0.5]))
