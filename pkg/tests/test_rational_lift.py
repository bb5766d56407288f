import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpwillmore.errors import DegenerateLift, DomainError
from dpwillmore.grid import Grid
from dpwillmore.lift import (DEFAULT_LIGHT, choose_light, light_candidates, null_lines,
                             project_lift)
from dpwillmore.linalg import I13, lorentz_inner
from dpwillmore.rational import RationalExpr, RationalMatrix

Z = RationalExpr.z()
cplx = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)
poly = st.lists(cplx, min_size=1, max_size=4)


def test_arithmetic_and_evaluation():
    f = (Z ** 2 + 1) / (Z - 2j)
    assert np.isclose(f(1 + 1j), ((1 + 1j) ** 2 + 1) / (1 - 1j))
    assert f.poles() == pytest.approx([2j])
    assert not f.is_polynomial() and f.degree == 2
    assert (3 / Z * Z).equals(3, tol=1e-15)
    assert (Z ** -2)(2.0) == 0.25
    assert RationalExpr([0.0], [1, 1]).is_zero()
    with pytest.raises(ZeroDivisionError):
        Z / RationalExpr([0.0])


def test_constant_denominator_is_folded():
    f = RationalExpr([2.0, 4.0], [2.0])
    assert f.is_polynomial() and np.array_equal(f.num, [1, 2])


def test_derivative():
    f = (Z + 1) / (Z - 1)
    z = 0.3 + 0.2j
    assert np.isclose(f.derivative()(z), -2 / (z - 1) ** 2)
    assert (Z ** 3).derivative().equals(3 * Z ** 2)


@given(poly, poly, cplx)
def test_field_laws(a, b, z):
    f, g = RationalExpr(a), RationalExpr(b) + Z ** 4 + 7
    assert np.isclose((f * g)(z), f(z) * g(z), rtol=1e-9, atol=1e-9)
    assert np.isclose((f + g)(z), f(z) + g(z), rtol=1e-9, atol=1e-9)
    assert ((f / g) * g).equals(f, tol=1e-6 * (1 + np.max(np.abs(g.num))) ** 4 * (1 + np.max(np.abs(f.num))))


@given(poly)
def test_text_roundtrip(a):
    f = RationalExpr(a) / (Z - 0.5)
    assert RationalExpr.coerce(f.to_text()) == f


def test_matrix_ops():
    M = RationalMatrix([[Z, 1], [0, 1 / (Z + 1)]])
    A = M(np.array([0.5, 2.0]))
    assert A.shape == (2, 2, 2)
    assert np.allclose(A[1], [[2, 1], [0, 1 / 3]])
    P = M @ M
    assert np.allclose(P(0.5), M(0.5) @ M(0.5))
    assert np.allclose(M.transpose()(0.5), M(0.5).T)
    assert M.poles() == pytest.approx([-1])
    assert (M - M).is_zero() and RationalMatrix.constant(np.eye(2)).is_constant()
    assert M.scale(2).equals(M + M)
    assert np.allclose(M.derivative()(0.5), [[1, 0], [0, -1 / 2.25]])


def test_null_lines():
    e = np.eye(4)
    lines = null_lines(np.vstack([e[0], e[1]]))
    assert len(lines) == 2
    for c in lines:
        assert abs(lorentz_inner(c, c)) < 1e-14 and c[0] > 0
    assert null_lines(e[2:4]) == []
    assert len(null_lines((e[0] + e[3])[None])) == 1


def test_light_candidates_cases():
    assert light_candidates(np.zeros((4, 2))) is None
    # rank-one, B1 = v c^t with v = (1, 1, 0, 0): kernel of B1^t I13 is v-perp, radical = v
    B1 = np.outer([1, 1, 0, 0], [1, 1j])
    (c,) = light_candidates(B1)
    assert np.allclose(c, np.array([1, 1, 0, 0]) / np.sqrt(2))
    # example frame-gauge block: columns (sqrt2 b, -sqrt2 b, -k, -ik)
    B1 = np.array([[0.3, 0], [-0.3, 0], [-1, 0.2], [-1j, 0.2j]])
    c, count = choose_light(B1)
    assert count >= 1 and np.allclose(B1.T @ I13 @ c, 0, atol=1e-12)
    assert abs(lorentz_inner(c, c)) < 1e-12


def test_choose_light_umbilic_and_failure():
    c, count = choose_light(np.zeros((4, 3)))
    assert count == 0 and np.allclose(c, DEFAULT_LIGHT)
    with pytest.raises(DegenerateLift):
        choose_light(np.eye(4)[:, :3])


def test_project_lift():
    assert np.allclose(project_lift([2.0, 2.0, 0, 0]), [1, 0, 0])
    with pytest.raises(DegenerateLift):
        project_lift([0.0, 1.0, 0.0])


def test_grid():
    g = Grid.parse("re:-1:1:5,im:0:2:3")
    assert g.shape == (3, 5) and g.z[2, 4] == 1 + 2j and g.spacing == 0.5
    assert Grid.parse(g.to_text()) == g
    for bad in ("re:0:1:3", "re:0:1:x,im:0:1:2", "re:0:1:0,im:0:1:2", "xx:0:1:2,im:0:1:2"):
        with pytest.raises(DomainError):
            Grid.parse(bad)
    with pytest.raises(DomainError):
        Grid((), (1.0,))
