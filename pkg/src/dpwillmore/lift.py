"""Light-cone lift of the surface from a frame and its lambda^{-1} block.

For a frame whose Maurer-Cartan form has ``lambda^{-1}`` block ``B1``, the
surface lift is ``Y = F[:, :4] c`` with ``c`` a real light-like vector in
the kernel of ``B1^t I13`` (``dY`` then stays inside the frame's Lorentzian
4-space).  In the frame gauge ``F = (Y+N, -Y+N, ...)/sqrt(2)`` this gives
``c = (1, -1, 0, 0)``, but frames produced by the Iwasawa splitting are in a
different K-gauge, so ``c`` is computed per point.
"""
import numpy as np

from .errors import DegenerateLift
from .linalg import I13, lorentz_inner

DEFAULT_LIGHT = np.array([1.0, -1.0, 0.0, 0.0]) / np.sqrt(2)


def _future(c):
    c = np.asarray(c, dtype=float)
    return -c if c[0] < 0 else c


def null_lines(basis):
    """Light-like lines in the real span of ``basis`` (rows), as unit vectors."""
    basis = np.atleast_2d(basis)
    if basis.shape[0] == 1:
        c = basis[0]
        scale = np.dot(c, c)
        if abs(lorentz_inner(c, c)) <= 1e-6 * scale:
            return [_future(c / np.linalg.norm(c))]
        return []
    if basis.shape[0] != 2:
        return []
    v1, v2 = basis
    q11 = lorentz_inner(v1, v1)
    q12 = lorentz_inner(v1, v2)
    q22 = lorentz_inner(v2, v2)
    out = []
    if abs(q22) < 1e-14:
        out.append(v2)
        if abs(q12) > 1e-14:
            # a q11 + 2 b q12 = 0
            out.append(2 * q12 * v1 - q11 * v2)
    else:
        disc = q12 ** 2 - q11 * q22
        if disc < -1e-14:
            return []
        r = np.sqrt(max(disc, 0.0))
        for sgn in (1.0, -1.0):
            # (a/b) q11 ... solve for b/a = t : q11 + 2 t q12 + t^2 q22 = 0
            t = (-q12 + sgn * r) / q22
            out.append(v1 + t * v2)
            if r == 0:
                break
    return [_future(c / np.linalg.norm(c)) for c in out]


def light_candidates(B1, rtol=1e-8):
    """Real light-like ``c`` with ``B1^t I13 c = 0``.

    Returns a list of unit vectors, or ``None`` when ``B1`` vanishes.
    """
    B1 = np.asarray(B1, dtype=complex)
    M = B1.T @ I13
    A = np.vstack([M.real, M.imag])
    _, s, vt = np.linalg.svd(A)
    smax = s[0] if s.size else 0.0
    if smax <= 1e-14:
        # umbilic: every direction is annihilated
        return None
    rank = int(np.sum(s > rtol * smax))
    kernel = vt[rank:]
    if kernel.shape[0] == 3:
        return _radical_line(kernel)
    if kernel.shape[0] == 0 or kernel.shape[0] > 3:
        return []
    return null_lines(kernel)


def _radical_line(kernel, tol=1e-10):
    """Null line of a degenerate 3-space (one zero, two positive form eigenvalues).

    This is the kernel when the real span of ``B1`` is a single null line.
    A Lorentzian 3-space holds a cone of null lines and gives no answer.
    """
    G = kernel @ I13 @ kernel.T
    w, V = np.linalg.eigh(G)
    scale = max(1.0, np.max(np.abs(w)))
    zero = np.abs(w) <= tol * scale
    if zero.sum() != 1 or np.any(w[~zero] < 0):
        return []
    c = V[:, zero][:, 0] @ kernel
    return [_future(c / np.linalg.norm(c))]


def choose_light(B1, hint=None, rtol=1e-8):
    """Pick the lift direction; ``hint`` (frame coordinates) breaks ties.

    Returns ``(c, count)``; ``count == 0`` flags an umbilic point
    (``B1 = 0``), where ``c`` falls back to the hint or the frame-gauge vector.
    Raises :class:`DegenerateLift` when no light-like kernel vector exists.
    """
    cands = light_candidates(B1, rtol)
    if cands is None:
        ref = DEFAULT_LIGHT if hint is None else np.asarray(hint, dtype=float)
        return _future(ref / np.linalg.norm(ref)), 0
    if not cands:
        raise DegenerateLift("no real light-like vector annihilated by B1^t I13")
    if len(cands) == 1:
        return cands[0], 1
    ref = DEFAULT_LIGHT if hint is None else np.asarray(hint, dtype=float)
    scores = [-lorentz_inner(c, ref) / (np.linalg.norm(c) * np.linalg.norm(ref)) for c in cands]
    # -<c, ref> >= 0 for future light-like vectors, zero iff parallel
    return cands[int(np.argmin(scores))], len(cands)


def project_lift(Y):
    """``y = Y[1:] / Y[0]`` for a (stack of) lift vectors."""
    Y = np.asarray(Y, dtype=float)
    if np.any(np.abs(Y[..., 0]) < 1e-12):
        raise DegenerateLift("lift has vanishing time component")
    return Y[..., 1:] / Y[..., :1]
