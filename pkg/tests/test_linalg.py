import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpwillmore.errors import DomainError
from dpwillmore.linalg import (algebra_residual, cartan_split, commutator, group_residual,
                               is_in_algebra, is_in_group, k_mask, matrix_exp, minkowski_form,
                               random_algebra_element)


def test_minkowski_form_shapes():
    assert np.array_equal(minkowski_form(3).matrix, np.diag([-1.0, 1, 1, 1, 1, 1, 1]))
    assert np.array_equal(minkowski_form(1).matrix, np.diag([-1.0, 1, 1, 1, 1]))
    e0 = np.eye(5)[0]
    assert minkowski_form(1).inner(e0, e0) == -1
    with pytest.raises(DomainError):
        minkowski_form(0)


def test_form_is_involution():
    I = minkowski_form(4).matrix
    assert np.array_equal(I @ I, np.eye(8))


def test_algebra_membership_examples():
    f = minkowski_form(2)
    assert is_in_algebra(np.zeros((6, 6)), f)
    X = np.zeros((6, 6))
    X[0, 1] = X[1, 0] = 1.0
    assert is_in_algebra(X, f)
    assert not is_in_algebra(np.eye(6), f)
    with pytest.raises(DomainError):
        is_in_algebra(np.zeros((5, 5)), f)


def test_group_membership_examples(rng):
    f = minkowski_form(3)
    assert is_in_group(np.eye(7), f) == "real_plus"
    delta = np.diag([-1.0, 1, 1, 1, -1, 1, 1])
    assert is_in_group(delta, f) == "real_other"
    X = random_algebra_element(3, rng)
    assert is_in_group(matrix_exp(X), f) == "complex_group"
    assert is_in_group(2 * np.eye(7), f) == "none"


def test_cartan_split_examples(rng):
    f = minkowski_form(2)
    X = random_algebra_element(2, rng)
    kd = cartan_split(np.where(k_mask(6), X, 0))
    assert np.all(kd.p_part == 0)
    po = cartan_split(np.where(k_mask(6), 0, X))
    assert np.all(po.k_part == 0)
    sp = cartan_split(X)
    assert np.array_equal(sp.k_part + sp.p_part, X)
    assert is_in_algebra(sp.k_part, f) and is_in_algebra(sp.p_part, f)
    with pytest.raises(DomainError):
        cartan_split(np.eye(6))


def test_matrix_exp_examples():
    assert np.array_equal(matrix_exp(np.zeros((5, 5))), np.eye(5))
    N = np.zeros((5, 5))
    N[0, 1], N[1, 3] = 2.0, -3.0  # N^3 = 0
    assert np.allclose(np.linalg.matrix_power(N, 3), 0)
    assert np.allclose(matrix_exp(N), np.eye(5) + N + N @ N / 2, atol=1e-15)


def test_matrix_exp_inverse_large_norm(rng):
    X = random_algebra_element(3, rng)
    X = 10 * X / np.linalg.norm(X, 2)
    assert np.max(np.abs(matrix_exp(X) @ matrix_exp(-X) - np.eye(7))) < 1e-12 * np.linalg.norm(matrix_exp(X), 2) ** 2


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_exp_maps_algebra_to_group(n, seed):
    rng = np.random.default_rng(seed)
    X = random_algebra_element(n, rng)
    X = X / max(1.0, np.linalg.norm(X, 2))
    assert algebra_residual(X, minkowski_form(n)) < 1e-14
    assert is_in_group(matrix_exp(X), minkowski_form(n)) in ("complex_group", "real_plus")
    assert group_residual(matrix_exp(X), minkowski_form(n)) < 1e-12


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_k_parts_close_under_bracket(n, seed):
    rng = np.random.default_rng(seed)
    a = cartan_split(random_algebra_element(n, rng)).k_part
    b = cartan_split(random_algebra_element(n, rng)).k_part
    c = commutator(a, b)
    assert np.max(np.abs(np.where(k_mask(n + 4), 0, c))) <= 1e-12


def test_real_sample_is_real_plus(rng):
    X = random_algebra_element(2, rng, scale=0.3, real=True)
    assert is_in_group(matrix_exp(X), minkowski_form(2)) == "real_plus"
