"""Closed-form reference surfaces used as oracles."""
import numpy as np

from .errors import DomainError


def example_s6(z, lam=1.0):
    """Willmore two-sphere in S^6 and its associated family ``y_lambda``.

    Vectorized over ``z`` (and broadcastable ``lam``); output has a trailing
    axis of length 7.  Works in extended precision when ``z`` is ``clongdouble``.
    """
    z = np.asarray(z)
    if z.dtype not in (np.complex64, np.complex128, np.clongdouble):
        z = z.astype(complex)
    lam = np.asarray(lam, dtype=z.dtype)
    zb = np.conj(z)
    r2 = (z * zb).real
    li = 1 / lam
    one = np.ones_like(r2)
    den = 1 + r2 + 5 * r2 ** 2 / 4 + 4 * r2 ** 3 / 9 + r2 ** 4 / 36
    f1 = 1 + r2 ** 3 / 9
    f2 = 1 - r2 ** 2 / 12
    f3 = 1 + 4 * r2 / 3
    comps = [
        (1 - r2 - 3 * r2 ** 2 / 4 + 4 * r2 ** 3 / 9 - r2 ** 4 / 36) * one,
        (-1j * (z - zb) * f1).real,
        ((z + zb) * f1).real,
        (-1j * (li * z ** 2 - lam * zb ** 2) * f2).real,
        ((li * z ** 2 + lam * zb ** 2) * f2).real,
        (-1j * r2 / 2 * (li * z - lam * zb) * f3).real,
        (r2 / 2 * (li * z + lam * zb) * f3).real,
    ]
    return np.stack(np.broadcast_arrays(*comps), axis=-1) / den[..., None]


def rotation_D(lam):
    """Block rotation relating the associated family: ``y_lambda = D_lambda y_1``."""
    lam = complex(lam)
    if abs(abs(lam) - 1) > 1e-12:
        raise DomainError("rotation_D needs |lambda| = 1")
    c = ((lam + 1 / lam) / 2).real
    s = ((lam - 1 / lam) / 2j).real
    D = np.eye(7)
    for a in (3, 5):
        D[a, a] = c
        D[a, a + 1] = -s
        D[a + 1, a] = s
        D[a + 1, a + 1] = c
    return D


def cylinder_lift(u, v, a, b):
    """Light-cone lift ``(cosh av, sinh av, cos u cos bv, cos u sin bv, sin u cos bv, sin u sin bv)``."""
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    return np.stack([np.cosh(a * v), np.sinh(a * v), np.cos(u) * np.cos(b * v),
                     np.cos(u) * np.sin(b * v), np.sin(u) * np.cos(b * v),
                     np.sin(u) * np.sin(b * v)], axis=-1)


def cylinder_immersion(u, v, a, b):
    """Homogeneous cylinder in S^4; ``a^2 + b^2 = 1``."""
    if abs(a * a + b * b - 1) > 1e-12:
        raise DomainError("cylinder parameters need a^2 + b^2 = 1")
    Y = cylinder_lift(u, v, a, b)
    return Y[..., 1:] / Y[..., :1]


def ejiri_immersion(u, v, b):
    """Homogeneous torus in S^5 (Ejiri's torus for ``b = 1``), scaled to the unit sphere."""
    if not b > 0:
        raise DomainError("ejiri parameter b must be positive")
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    w1 = v / np.sqrt(3)
    w2 = v / (np.sqrt(3) * b)
    y = np.stack([np.cos(u) * np.cos(w1), np.cos(u) * np.sin(w1),
                  np.sin(u) * np.cos(w1), np.sin(u) * np.sin(w1),
                  np.sqrt(2) * b * np.cos(w2), np.sqrt(2) * b * np.sin(w2)], axis=-1)
    return y / np.sqrt(1 + 2 * b * b)
