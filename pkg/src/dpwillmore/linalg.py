"""Minkowski form, algebra/group membership tests and the Cartan splitting.

All matrices are of size ``N = n + 4``: a Lorentzian ``4 x 4`` block
(signature ``-+++``) followed by a Euclidean ``n x n`` block.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError

DEFAULT_TOL = 1e-10

I13 = np.diag([-1.0, 1.0, 1.0, 1.0])


@dataclass(frozen=True)
class FormMatrix:
    """The diagonal form ``diag(-1, 1, ..., 1)`` of size ``n + 4``."""

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise DomainError(f"codimension n must be >= 1, got {self.n}")

    @property
    def dim_total(self):
        return self.n + 4

    @property
    def diagonal(self):
        d = np.ones(self.dim_total)
        d[0] = -1.0
        return d

    @property
    def matrix(self):
        return np.diag(self.diagonal)

    def inner(self, x, y):
        """Bilinear (not sesquilinear) pairing ``x^t I y`` over the last axis."""
        return np.einsum("...i,i,...i->...", x, self.diagonal, y)


@dataclass(frozen=True)
class CartanSplit:
    k_part: np.ndarray
    p_part: np.ndarray


def minkowski_form(n):
    """Return the form ``I_{1,n+3}`` as a :class:`FormMatrix`."""
    return FormMatrix(int(n))


def lorentz_inner(x, y):
    """``-x0 y0 + x1 y1 + ...`` along the last axis, bilinear."""
    x = np.asarray(x)
    y = np.asarray(y)
    return np.sum(x * y, axis=-1) - 2 * x[..., 0] * y[..., 0]


def _check_size(X, form):
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] != form.dim_total:
        raise DomainError(
            f"matrix of shape {X.shape} does not match form of size {form.dim_total}")
    return X


def algebra_residual(X, form):
    X = _check_size(X, form)
    d = form.diagonal
    # X^t I + I X with I diagonal
    R = X.T * d[None, :] + d[:, None] * X
    return float(np.max(np.abs(R))) if R.size else 0.0


def is_in_algebra(X, form, tol=DEFAULT_TOL):
    """True iff ``||X^t I + I X||_inf <= tol``."""
    return algebra_residual(X, form) <= tol


def group_residual(M, form):
    M = _check_size(M, form)
    d = form.diagonal
    R = (M.T * d[None, :]) @ M - np.diag(d)
    return float(np.max(np.abs(R)))


def is_in_group(M, form, tol=DEFAULT_TOL):
    """Classify ``M`` as ``complex_group``, ``real_plus``, ``real_other`` or ``none``.

    ``real_plus`` is the identity component of the real group: real, orthogonal
    for the form, det 1, ``M00 >= 1`` and the Euclidean block with det 1.
    """
    M = _check_size(M, form)
    if group_residual(M, form) > tol * max(1.0, np.max(np.abs(M)) ** 2):
        return "none"
    if abs(np.linalg.det(M) - 1.0) > max(tol, 1e-8) * max(1.0, np.max(np.abs(M)) ** M.shape[0]):
        return "none"
    if np.max(np.abs(np.imag(M))) > tol * max(1.0, np.max(np.abs(M))):
        return "complex_group"
    if np.real(M[0, 0]) >= 1.0 - tol:
        return "real_plus"
    return "real_other"


def k_mask(N):
    """Boolean mask of the block-diagonal (``4 x 4`` and ``n x n``) entries."""
    m = np.zeros((N, N), dtype=bool)
    m[:4, :4] = True
    m[4:, 4:] = True
    return m


def cartan_split(X, form=None, tol=DEFAULT_TOL):
    """Split an algebra element into block-diagonal and off-diagonal parts."""
    X = np.asarray(X)
    if form is None:
        form = minkowski_form(X.shape[0] - 4)
    if not is_in_algebra(X, form, tol * max(1.0, np.max(np.abs(X), initial=0.0))):
        raise DomainError("cartan_split expects an element of so(1, n+3)")
    m = k_mask(X.shape[0])
    return CartanSplit(np.where(m, X, 0), np.where(m, 0, X))


def commutator(A, B):
    return A @ B - B @ A


def matrix_exp(X):
    """Matrix exponential (scaling and squaring with a Pade core).

    Accepts stacks of matrices along leading axes.
    """
    X = np.asarray(X)
    if not np.all(np.isfinite(X)):
        raise NumericError("matrix_exp: non-finite entries")
    with np.errstate(over="raise", invalid="raise"):
        try:
            E = scipy.linalg.expm(X)
        except FloatingPointError as exc:
            raise NumericError(f"matrix_exp overflow: {exc}") from None
    if not np.all(np.isfinite(E)):
        raise NumericError("matrix_exp overflow")
    return E


def group_inverse(M):
    """Inverse of a group element: ``I M^t I``. Works on stacks."""
    M = np.asarray(M)
    N = M.shape[-1]
    d = np.ones(N)
    d[0] = -1.0
    return d[:, None] * np.swapaxes(M, -1, -2) * d[None, :]


def random_algebra_element(n, rng, scale=1.0, real=False):
    """Random element of so(1, n+3) (complexified unless ``real``) of 2-norm ``scale``."""
    N = n + 4
    A = rng.standard_normal((N, N))
    if not real:
        A = A + 1j * rng.standard_normal((N, N))
    d = np.ones(N)
    d[0] = -1.0
    # X = S I with S antisymmetric satisfies X^t I + I X = 0
    X = (A - A.T) * d[None, :]
    return X * (scale / np.linalg.norm(X, 2))
