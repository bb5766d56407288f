import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpwillmore.errors import DomainError, PoleError, SingularLoop
from dpwillmore.linalg import group_residual, minkowski_form, random_algebra_element
from dpwillmore.loops import (TwistedLoop, evaluate, invert, loop_exp, multiply, parity_masks,
                              product_residual, random_twisted_algebra_loop, tau, unit_circle)


def _odd_block(n, rng):
    X = random_algebra_element(n, rng)
    return np.where(parity_masks(n + 4)[1], X, 0)


def _nilpotent_odd(n):
    """Odd-block algebra element with N^3 = 0: B1 a single null column."""
    N = np.zeros((n + 4, n + 4))
    v = np.array([1.0, 1.0, 0, 0])
    N[:4, 4] = v
    N[4, :4] = -v * np.array([-1, 1, 1, 1])
    return N


def _random_loop(n, deg, rng, norm=0.4):
    return loop_exp(random_twisted_algebra_loop(n, deg, rng, norm))


def _parity_exact(a):
    even, odd = parity_masks(a.N)
    for j in a.powers:
        forbidden = ~even if j % 2 == 0 else ~odd
        if np.any(a.coeff(j)[forbidden] != 0):
            return False
    return True


def test_construction_enforces_parity(rng):
    c = rng.normal(size=(3, 6, 6)) + 0j
    a = TwistedLoop(c, 1, 1)
    assert _parity_exact(a)
    with pytest.raises(DomainError):
        TwistedLoop(np.zeros((2, 6, 6)), 1, 1)
    with pytest.raises(DomainError):
        TwistedLoop(np.zeros((1, 4, 4)), 0, 0)


def test_multiply_identity_and_telescoping(rng):
    a = _random_loop(2, 2, rng)
    I = TwistedLoop.identity(2)
    assert np.allclose(multiply(a, I).coeffs, a.coeffs, atol=0)
    N = _odd_block(2, rng)
    p = TwistedLoop.from_dict({0: np.eye(6), -1: N})
    m = TwistedLoop.from_dict({0: np.eye(6), -1: -N})
    prod = multiply(p, m, d_neg=2, d_pos=0)
    assert np.allclose(prod.coeff(-2), -N @ N, atol=1e-15)
    assert np.allclose(prod.coeff(-1), 0, atol=1e-15)
    assert np.allclose(prod.coeff(0), np.eye(6), atol=1e-15)


def test_multiply_matches_pointwise(rng):
    a = _random_loop(3, 3, rng)
    b = _random_loop(3, 3, rng)
    ab = multiply(a, b, d_neg=a.d_neg + b.d_neg, d_pos=a.d_pos + b.d_pos)
    for lam in unit_circle(8):
        assert np.max(np.abs(evaluate(ab, lam) - evaluate(a, lam) @ evaluate(b, lam))) < 1e-12


def test_invert_examples(rng):
    I = TwistedLoop.identity(2, 1, 1)
    assert np.allclose(invert(I).coeffs, I.coeffs, atol=1e-15)
    N = _nilpotent_odd(2)
    assert np.allclose(np.linalg.matrix_power(N, 3), 0)
    a = TwistedLoop.from_dict({0: np.eye(6), -1: N})
    ai = a.invert(d_neg=2, d_pos=0)
    assert np.allclose(ai.coeff(-1), -N, atol=1e-14)
    assert np.allclose(ai.coeff(-2), N @ N, atol=1e-14)
    # near-identity degree-8 loop with decaying coefficients: the inverse's tail is resolvable
    X = random_twisted_algebra_loop(3, 8, rng, 1.0)
    decay = 0.25 ** np.abs(np.arange(-8, 9))
    g = TwistedLoop.identity(3, 8, 8) + TwistedLoop(X.coeffs * decay[:, None, None], 8, 8)
    gi = g.invert(samples=64, d_neg=28, d_pos=28)
    assert product_residual([g, gi], TwistedLoop.identity(3)) < 1e-10


def test_invert_singular():
    c = np.zeros((1, 5, 5))
    with pytest.raises(SingularLoop):
        TwistedLoop(c, 0, 0).invert()


def test_evaluate_examples(rng):
    I = TwistedLoop.identity(1, 2, 2)
    assert np.array_equal(I.evaluate(0.3 + 0.4j), np.eye(5))
    a = _random_loop(2, 2, rng)
    D = np.diag([-1.0] * 4 + [1.0] * 2)
    lam = np.exp(0.7j)
    assert np.allclose(a.evaluate(-lam), D @ a.evaluate(lam) @ D, atol=1e-13)
    with pytest.raises(PoleError):
        a.evaluate(0)
    r = a + a.tau()  # tau-fixed
    assert r.reality_defect() == 0
    assert np.max(np.abs(r.evaluate(1.0).imag)) < 1e-14


def test_group_values(rng):
    g = _random_loop(2, 4, rng)
    for lam in unit_circle(8):
        assert group_residual(g.evaluate(lam), minkowski_form(2)) < 1e-12


def test_tau_examples(rng):
    M = np.eye(5)
    c = TwistedLoop.constant(M)
    assert np.array_equal(tau(c).coeffs, c.coeffs)
    N = _odd_block(1, rng)
    t = tau(TwistedLoop.from_dict({-1: N}))
    assert t.d_pos == 1 and np.array_equal(t.coeff(1), np.conj(N))
    a = _random_loop(1, 3, rng)
    assert np.array_equal(tau(tau(a)).coeffs, a.coeffs)


@given(st.integers(0, 2**32 - 1))
def test_parity_closed_under_operations(seed):
    rng = np.random.default_rng(seed)
    a = _random_loop(2, 2, rng)
    b = _random_loop(2, 2, rng)
    for x in (a @ b, a.invert(), a.tau(), a + b, a.group_inverse()):
        assert _parity_exact(x)


@given(st.integers(0, 2**32 - 1))
def test_tau_is_multiplicative(seed):
    rng = np.random.default_rng(seed)
    a = _random_loop(2, 2, rng)
    b = _random_loop(2, 2, rng)
    d = a.d_neg + b.d_neg, a.d_pos + b.d_pos
    lhs = multiply(a, b, *d).tau()
    rhs = multiply(a.tau(), b.tau(), d[1], d[0])
    assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_evaluation_is_homomorphism(seed):
    rng = np.random.default_rng(seed)
    a = _random_loop(1, 2, rng)
    b = _random_loop(1, 2, rng)
    s = a + b
    ab = multiply(a, b, a.d_neg + b.d_neg, a.d_pos + b.d_pos)
    for lam in unit_circle(8):
        assert np.allclose(s.evaluate(lam), a.evaluate(lam) + b.evaluate(lam), atol=1e-13)
        assert np.allclose(ab.evaluate(lam), a.evaluate(lam) @ b.evaluate(lam), atol=1e-12)


def test_loop_class(rng):
    N = _odd_block(1, rng)
    assert TwistedLoop.from_dict({0: np.eye(5), -1: N}).loop_class() == "minus_star"
    assert TwistedLoop.from_dict({0: 2 * np.eye(5), -1: N}).loop_class() == "minus"
    assert TwistedLoop.from_dict({0: np.eye(5), 1: N}).loop_class() == "plus"
    X = TwistedLoop.from_dict({-1: N, 1: np.conj(N)})
    assert X.loop_class() == "real"


def test_json_roundtrip(rng):
    a = _random_loop(2, 3, rng)
    doc = json.loads(a.to_json())
    assert set(doc) >= {"n", "d_neg", "d_pos", "coeffs"}
    assert set(doc["coeffs"][0]) == {"power", "matrix"}
    b = TwistedLoop.from_json(a.to_json())
    assert np.array_equal(a.coeffs, b.coeffs) and (a.d_neg, a.d_pos) == (b.d_neg, b.d_pos)


def test_truncation_is_tracked(rng):
    a = _random_loop(2, 3, rng, norm=0.8)
    t = a.truncate(1, 1)
    assert t.dropped > 0
    assert t.dropped == pytest.approx(max(np.max(np.abs(a.coeff(j))) for j in a.powers if abs(j) > 1))
