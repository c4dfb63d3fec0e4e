import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import simpson

from ramanpert import raman
from ramanpert.errors import Mismatch, NearResonance, SecularTerm
from ramanpert.hilbert import Operator, SpaceSpec, identity, sigma, total_number
from ramanpert.trigpoly import (
    FreqBasis,
    TrigPolyOp,
    tp_commutator,
    tp_definite_integral,
    tp_eval,
    tp_eval_array,
    tp_mean,
    tp_oscillating_part,
    tp_product,
    tp_zero_mean_primitive,
)

SCALAR = SpaceSpec(atomic_dim=1, mode_count=0)
FOUR = SpaceSpec(atomic_dim=4, mode_count=0)
THREE = SpaceSpec(atomic_dim=3, mode_count=0)
BASIS = FreqBasis(["D", "E"], [3.0, 1.0 + math.sqrt(2)])


def scalar(x):
    return np.array([[x]], dtype=complex)


def random_poly(rng, keys, space=FOUR, basis=BASIS):
    n = space.dim
    return TrigPolyOp(
        basis, space, {k: rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for k in keys}
    )


def hermitian_poly(rng, pos_keys, space=FOUR, basis=BASIS, mean=True):
    n = space.dim
    terms = {}
    for k in pos_keys:
        b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        terms[k] = b
        terms[tuple(-c for c in k)] = b.conj().T
    if mean:
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        terms[basis.zero] = a + a.conj().T
    return TrigPolyOp(basis, space, terms)


# basis -----------------------------------------------------------------------


def test_basis_rejects_zero_and_duplicates():
    with pytest.raises(ValueError):
        FreqBasis(["a"], [0.0])
    with pytest.raises(ValueError):
        FreqBasis(["a", "a"], [1.0, 2.0])


def test_keys_and_values():
    assert BASIS.key(D=2, E=-1) == (2, -1)
    assert BASIS.value((2, -1)) == pytest.approx(6 - (1 + math.sqrt(2)))
    with pytest.raises(KeyError):
        BASIS.key(F=1)


# canonical form --------------------------------------------------------------


def test_tiny_terms_dropped_and_order_sorted():
    f = TrigPolyOp(BASIS, SCALAR, {(1, 0): scalar(1.0), (-1, 0): scalar(1e-16), (0, -1): scalar(2.0)})
    assert f.keys() == [(0, -1), (1, 0)]


def test_coefficients_read_only():
    f = TrigPolyOp(BASIS, SCALAR, {(1, 0): scalar(1.0)})
    with pytest.raises(ValueError):
        f.arrays()[(1, 0)][0, 0] = 5


def test_basis_mismatch():
    other = FreqBasis(["D", "E"], [3.0, 2.0])
    f = TrigPolyOp(BASIS, SCALAR, {(1, 0): scalar(1.0)})
    g = TrigPolyOp(other, SCALAR, {(1, 0): scalar(1.0)})
    with pytest.raises(Mismatch):
        f + g
    with pytest.raises(Mismatch):
        tp_product(f, g)


def test_round_trip_serialization():
    f = random_poly(np.random.default_rng(1), [(0, 0), (1, 0), (-1, 2)])
    g = TrigPolyOp.from_dict(f.to_dict())
    assert g.keys() == f.keys()
    for k in f.keys():
        np.testing.assert_array_equal(g.arrays()[k], f.arrays()[k])


# product / commutator --------------------------------------------------------


def test_product_frequencies_cancel():
    f = TrigPolyOp(BASIS, SCALAR, {(1, 0): scalar(2.0)})
    g = TrigPolyOp(BASIS, SCALAR, {(-1, 0): scalar(3.5)})
    p = tp_product(f, g)
    assert p.keys() == [BASIS.zero]
    assert p.coefficient(BASIS.zero).matrix[0, 0] == 7.0


def test_product_identity():
    g = random_poly(np.random.default_rng(2), [(1, 0), (0, 1), (1, 1)])
    one = TrigPolyOp.constant(BASIS, identity(FOUR))
    p = tp_product(one, g)
    assert p.keys() == g.keys()
    for k in g.keys():
        np.testing.assert_array_equal(p.arrays()[k], g.arrays()[k])


@pytest.mark.parametrize("t", [0.3, 1.7])
def test_product_pointwise(t):
    rng = np.random.default_rng(3)
    f = random_poly(rng, [(1, 0), (0, -1)])
    g = random_poly(rng, [(0, 0), (-1, 0), (1, 1)])
    lhs = tp_eval_array(tp_product(f, g), t)
    rhs = tp_eval_array(f, t) @ tp_eval_array(g, t)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_scalar_commutator_vanishes():
    f = TrigPolyOp(BASIS, SCALAR, {(1, 0): scalar(2.0), (0, 0): scalar(1.0)})
    g = TrigPolyOp(BASIS, SCALAR, {(0, -1): scalar(1j)})
    assert tp_commutator(f, g).is_zero()


def test_commutator_sigma_pair():
    b = FreqBasis(["D"], [7.0])
    f = TrigPolyOp(b, THREE, {(1,): sigma(THREE, 1, 3)})
    g = TrigPolyOp(b, THREE, {(-1,): sigma(THREE, 3, 1)})
    c = tp_commutator(f, g)
    assert c.keys() == [(0,)]
    assert c.coefficient((0,)) == sigma(THREE, 1, 1) - sigma(THREE, 3, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_i_commutator_of_hermitian_is_hermitian(seed):
    rng = np.random.default_rng(seed)
    f = hermitian_poly(rng, [(1, 0), (1, -1)])
    g = hermitian_poly(rng, [(0, 1)])
    assert (1j * tp_commutator(f, g)).is_hermitian_valued()


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_product_associative(seed):
    rng = np.random.default_rng(seed)
    f = random_poly(rng, [(1, 0), (0, 0)])
    g = random_poly(rng, [(0, 1), (-1, 0)])
    h = random_poly(rng, [(1, -1)])
    left = tp_product(tp_product(f, g), h)
    right = tp_product(f, tp_product(g, h))
    assert left.keys() == right.keys()
    for k in left.keys():
        assert np.linalg.norm(left.arrays()[k] - right.arrays()[k]) <= 1e-12 * max(
            1.0, np.linalg.norm(left.arrays()[k])
        )


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_commutator_antisymmetric_and_jacobi(seed):
    rng = np.random.default_rng(seed)
    f, g, h = (random_poly(rng, [(1, 0), (0, -1)]) for _ in range(3))
    assert (tp_commutator(f, g) + tp_commutator(g, f)).max_norm() <= 1e-12 * tp_commutator(f, g).max_norm()
    jac = (
        tp_commutator(f, tp_commutator(g, h))
        + tp_commutator(g, tp_commutator(h, f))
        + tp_commutator(h, tp_commutator(f, g))
    )
    assert jac.max_norm() <= 1e-11 * tp_commutator(f, tp_commutator(g, h)).max_norm()


# mean ------------------------------------------------------------------------


def test_mean_extracts_zero_key():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    f = TrigPolyOp(BASIS, FOUR, {(0, 0): a, (1, 0): b, (-1, 0): b.conj().T})
    np.testing.assert_array_equal(tp_mean(f).matrix, a)
    assert tp_mean(TrigPolyOp.zero(BASIS, FOUR)) == Operator.zeros(FOUR)


def test_mean_against_quadrature():
    """Simpson average over tau = 1e4 / min|w| approaches the zero-key coefficient."""
    rng = np.random.default_rng(5)
    f = hermitian_poly(rng, [(1, 0), (0, 1), (1, -1)])
    w_min = min(abs(BASIS.value(k)) for k in f.keys() if k != BASIS.zero)
    tau = 1e4 / w_min
    ts = np.linspace(0.0, tau, 100_001)
    vals = np.stack([tp_eval(f, t).matrix for t in ts])
    avg = simpson(vals, x=ts, axis=0) / tau
    biggest = max(np.linalg.norm(m) for m in f.arrays().values())
    assert np.linalg.norm(avg - tp_mean(f).matrix) <= 1e-3 * biggest


def test_mean_of_raman_first_order_is_trap():
    cfg = raman.default_config()
    h = raman.build_interaction_orders(cfg)
    g = cfg.coupling_scale
    expected = (cfg.trap_freq / g) * total_number(cfg.space).matrix
    np.testing.assert_allclose(tp_mean(h.orders[0]).matrix, expected, atol=1e-15)


def test_near_resonance_lists_keys():
    b = FreqBasis(["a", "b"], [1.0, 1.0 + 1e-12])
    f = TrigPolyOp(b, SCALAR, {(1, -1): scalar(1.0), (1, 0): scalar(1.0)})
    with pytest.raises(NearResonance) as info:
        tp_mean(f)
    assert info.value.keys == ((1, -1),)
    with pytest.raises(NearResonance):
        tp_zero_mean_primitive(f)


# primitive -------------------------------------------------------------------


def test_primitive_scalar():
    b = FreqBasis(["w0"], [2.0])
    f = TrigPolyOp(b, SCALAR, {(1,): scalar(4.0)})
    p = tp_zero_mean_primitive(f)
    assert p.coefficient((1,)).matrix[0, 0] == -2j


def test_primitive_term_rule_and_hermiticity():
    rng = np.random.default_rng(6)
    f = hermitian_poly(rng, [(1, 0)], mean=False)
    p = tp_zero_mean_primitive(f)
    d = BASIS.values[0]
    np.testing.assert_allclose(p.arrays()[(1, 0)], f.arrays()[(1, 0)] / (1j * d))
    np.testing.assert_allclose(p.arrays()[(-1, 0)], -f.arrays()[(-1, 0)] / (1j * d))
    assert p.is_hermitian_valued()
    assert BASIS.zero not in p.keys()


def test_primitive_secular_term():
    f = TrigPolyOp(BASIS, SCALAR, {(0, 0): scalar(1.0), (1, 0): scalar(1.0)})
    with pytest.raises(SecularTerm):
        tp_zero_mean_primitive(f)
    p = tp_zero_mean_primitive(tp_oscillating_part(f))
    assert p.keys() == [(1, 0)]


def test_primitive_finite_difference():
    rng = np.random.default_rng(7)
    f = hermitian_poly(rng, [(1, 0), (0, 1), (2, -1)], mean=False)
    p = tp_zero_mean_primitive(f)
    h = 1e-5
    for t in rng.uniform(0.0, 10.0, size=10):
        deriv = (tp_eval_array(p, t + h) - tp_eval_array(p, t - h)) / (2 * h)
        target = tp_eval_array(f, t)
        assert np.linalg.norm(deriv - target) <= 1e-6 * np.linalg.norm(target)


# evaluation ------------------------------------------------------------------


def test_eval_examples():
    rng = np.random.default_rng(8)
    f = random_poly(rng, [(0, 0), (1, 0), (0, -1)])
    np.testing.assert_allclose(tp_eval(f, 0.0).matrix, sum(f.arrays().values()), atol=1e-15)

    a = rng.normal(size=(4, 4))
    const = TrigPolyOp(BASIS, FOUR, {(0, 0): a})
    np.testing.assert_array_equal(tp_eval(const, 12.3).matrix, a)

    single = TrigPolyOp(BASIS, FOUR, {(1, 0): a})
    np.testing.assert_allclose(tp_eval(single, math.pi / BASIS.values[0]).matrix, -a, atol=1e-14)


def test_definite_integral_against_primitive():
    rng = np.random.default_rng(9)
    f = hermitian_poly(rng, [(1, 0), (0, 1)])
    t = 2.2
    osc = tp_oscillating_part(f)
    p = tp_zero_mean_primitive(osc)
    expected = tp_mean(f).matrix * t + tp_eval_array(p, t) - tp_eval_array(p, 0.0)
    np.testing.assert_allclose(tp_definite_integral(f, t).matrix, expected, atol=1e-12)
