import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpwillmore.errors import DomainError
from dpwillmore.reference import (cylinder_immersion, cylinder_lift, ejiri_immersion, example_s6,
                                  rotation_D)

phase = st.floats(0, 2 * np.pi, allow_nan=False)


def test_example_on_sphere_and_origin():
    rng = np.random.default_rng(3)
    z = rng.normal(size=50) + 1j * rng.normal(size=50)
    y = example_s6(z)
    assert y.shape == (50, 7)
    assert np.max(np.abs(np.linalg.norm(y, axis=-1) - 1)) < 1e-14
    assert np.allclose(example_s6(0j), np.eye(7)[0])


def test_example_extended_precision():
    z = np.array([0.3 + 0.4j], dtype=np.clongdouble)
    y = example_s6(z)
    assert y.dtype == np.longdouble
    assert np.max(np.abs(y.astype(float) - example_s6(complex(z[0])))) < 1e-15


@pytest.mark.parametrize("lam", [1j, np.exp(1j * np.pi / 4), np.exp(2.1j)])
def test_associated_family_is_rotation(lam):
    z = np.linspace(-1, 1, 9)[:, None] + 1j * np.linspace(-1, 1, 9)[None, :]
    assert np.max(np.abs(example_s6(z, lam) - example_s6(z) @ rotation_D(lam).T)) < 1e-12


@given(phase, phase)
def test_rotation_group_law(a, b):
    la, lb = np.exp(1j * a), np.exp(1j * b)
    D = rotation_D(la)
    assert np.allclose(D @ D.T, np.eye(7), atol=1e-14)
    assert np.allclose(D @ rotation_D(lb), rotation_D(la * lb), atol=1e-13)


def test_rotation_domain():
    assert np.array_equal(rotation_D(1.0), np.eye(7))
    with pytest.raises(DomainError):
        rotation_D(1.1)


def test_cylinder_lift_is_null_and_immersion_on_sphere():
    u, v = np.meshgrid(np.linspace(0, 6, 7), np.linspace(-2, 2, 5))
    Y = cylinder_lift(u, v, 0.6, 0.8)
    q = -Y[..., 0] ** 2 + np.sum(Y[..., 1:] ** 2, axis=-1)
    assert np.max(np.abs(q)) < 1e-12
    y = cylinder_immersion(u, v, 0.6, 0.8)
    assert np.max(np.abs(np.linalg.norm(y, axis=-1) - 1)) < 1e-14
    with pytest.raises(DomainError):
        cylinder_immersion(u, v, 0.6, 0.6)


@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_ejiri_on_sphere_and_periodic(b):
    u, v = np.meshgrid(np.linspace(0, 6, 7), np.linspace(-2, 2, 5))
    y = ejiri_immersion(u, v, b)
    assert np.max(np.abs(np.linalg.norm(y, axis=-1) - 1)) < 1e-14
    assert np.allclose(ejiri_immersion(u + 2 * np.pi, v, b), y, atol=1e-13)
    if b == 1.0:
        assert np.allclose(ejiri_immersion(u, v + 2 * np.pi * np.sqrt(3), b), y, atol=1e-13)
    with pytest.raises(DomainError):
        ejiri_immersion(u, v, 0.0)
