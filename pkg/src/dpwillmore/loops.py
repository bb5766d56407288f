"""Truncated twisted matrix Laurent series in the loop parameter lambda.

A :class:`TwistedLoop` stores coefficients ``c_j`` for ``-d_neg <= j <= d_pos``.
The twist ``gamma(-lambda) = D gamma(lambda) D`` with ``D = diag(-I_4, I_n)``
forces even coefficients to be block diagonal and odd coefficients to be
block off-diagonal.  This is enforced structurally: forbidden blocks are
set to exactly zero on construction.

Samples on the unit circle use ``lambda_m = exp(2 pi i m / M)`` and
``c_j = fft(samples)[j mod M] / M``.
"""
import json

import numpy as np

from .errors import DomainError, PoleError, SingularLoop
from .linalg import group_inverse, k_mask

DEFAULT_DEGREE = 8


def parity_masks(N):
    even = k_mask(N)
    return even, ~even


def unit_circle(M):
    return np.exp(2j * np.pi * np.arange(M) / M)


def _fft_size(span, minimum=16):
    M = minimum
    while M < span:
        M *= 2
    return M


class TwistedLoop:
    """Truncated twisted Laurent series with matrix coefficients.

    Parameters
    ----------
    coeffs : array_like, shape (d_neg + d_pos + 1, N, N)
        ``coeffs[i]`` multiplies ``lambda ** (i - d_neg)``.
    d_neg, d_pos : int
        Truncation degrees.
    dropped : float
        Norm of coefficients discarded while producing this loop.
    """

    __slots__ = ("_c", "d_neg", "d_pos", "dropped")

    def __init__(self, coeffs, d_neg, d_pos, dropped=0.0):
        c = np.array(coeffs, dtype=complex)
        d_neg = int(d_neg)
        d_pos = int(d_pos)
        if d_neg < 0 or d_pos < 0:
            raise DomainError("truncation degrees must be >= 0")
        if c.ndim != 3 or c.shape[0] != d_neg + d_pos + 1 or c.shape[1] != c.shape[2]:
            raise DomainError(f"coefficient array of shape {c.shape} does not match "
                              f"degrees ({d_neg}, {d_pos})")
        if c.shape[1] < 5:
            raise DomainError("matrix size must be n + 4 with n >= 1")
        even, odd = parity_masks(c.shape[1])
        powers = np.arange(-d_neg, d_pos + 1)
        c[powers % 2 == 0] *= even
        c[powers % 2 == 1] *= odd
        c.flags.writeable = False
        self._c = c
        self.d_neg = d_neg
        self.d_pos = d_pos
        self.dropped = float(dropped)

    # construction -----------------------------------------------------
    @classmethod
    def identity(cls, n, d_neg=0, d_pos=0):
        return cls.constant(np.eye(n + 4), d_neg, d_pos)

    @classmethod
    def constant(cls, M, d_neg=0, d_pos=0):
        M = np.asarray(M, dtype=complex)
        c = np.zeros((d_neg + d_pos + 1,) + M.shape, dtype=complex)
        c[d_neg] = M
        return cls(c, d_neg, d_pos)

    @classmethod
    def from_dict(cls, terms, n=None):
        """Build from ``{power: matrix}``."""
        if not terms:
            raise DomainError("empty coefficient map; pass n via identity()")
        powers = list(terms)
        N = np.asarray(terms[powers[0]]).shape[0]
        if n is not None and N != n + 4:
            raise DomainError("matrix size does not match n")
        d_neg = max(0, -min(powers))
        d_pos = max(0, max(powers))
        c = np.zeros((d_neg + d_pos + 1, N, N), dtype=complex)
        for j, m in terms.items():
            c[j + d_neg] = m
        return cls(c, d_neg, d_pos)

    @classmethod
    def from_samples(cls, values, d_neg, d_pos):
        """Coefficients from values at ``M`` equispaced unit-circle points."""
        values = np.asarray(values, dtype=complex)
        M = values.shape[0]
        if M < d_neg + d_pos + 1:
            raise DomainError(f"{M} samples cannot resolve degrees ({d_neg}, {d_pos})")
        f = np.fft.fft(values, axis=0) / M
        idx = np.arange(-d_neg, d_pos + 1) % M
        kept = np.zeros(M, dtype=bool)
        kept[idx] = True
        dropped = float(np.max(np.abs(f[~kept]), initial=0.0))
        return cls(f[idx], d_neg, d_pos, dropped=dropped)

    @classmethod
    def from_function(cls, func, d_neg, d_pos, samples=None):
        """Sample ``func(lambda) -> matrix`` on the unit circle and transform."""
        M = samples or _fft_size(2 * (d_neg + d_pos + 1))
        lam = unit_circle(M)
        vals = np.array([func(l) for l in lam])
        return cls.from_samples(vals, d_neg, d_pos)

    # basic accessors --------------------------------------------------
    @property
    def coeffs(self):
        return self._c

    @property
    def N(self):
        return self._c.shape[1]

    @property
    def n(self):
        return self._c.shape[1] - 4

    @property
    def powers(self):
        return np.arange(-self.d_neg, self.d_pos + 1)

    def coeff(self, j):
        if -self.d_neg <= j <= self.d_pos:
            return self._c[j + self.d_neg]
        return np.zeros((self.N, self.N), dtype=complex)

    def as_dict(self):
        return {int(j): self.coeff(j) for j in self.powers}

    def __repr__(self):
        return f"TwistedLoop(n={self.n}, d_neg={self.d_neg}, d_pos={self.d_pos})"

    # evaluation ---------------------------------------------------------
    def evaluate(self, lam):
        """``sum_j c_j lam^j``; ``lam`` may be an array (result gets trailing ``N x N``)."""
        lam = np.asarray(lam, dtype=complex)
        if np.any(lam == 0) and self.d_neg > 0 and np.any(np.abs(self._c[: self.d_neg]) > 0):
            raise PoleError("evaluation at lambda = 0 of a loop with negative powers")
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = lam[..., None] ** self.powers
        pw = np.where(np.isfinite(pw), pw, 0)
        return np.einsum("...j,jab->...ab", pw, self._c)

    def samples(self, M):
        """Values at ``lambda_m = exp(2 pi i m / M)``, shape ``(M, N, N)``."""
        folded = np.zeros((M, self.N, self.N), dtype=complex)
        np.add.at(folded, self.powers % M, self._c)
        return np.fft.ifft(folded, axis=0) * M

    # algebra ------------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, TwistedLoop):
            raise DomainError("expected a TwistedLoop")
        if other.N != self.N:
            raise DomainError(f"size mismatch: {self.N} vs {other.N}")

    def multiply(self, other, d_neg=None, d_pos=None):
        """Cauchy product, truncated to the larger input degrees by default."""
        self._check(other)
        if d_neg is None:
            d_neg = max(self.d_neg, other.d_neg)
        if d_pos is None:
            d_pos = max(self.d_pos, other.d_pos)
        lo = -self.d_neg - other.d_neg
        hi = self.d_pos + other.d_pos
        la, lb = self._c.shape[0], other._c.shape[0]
        if la * lb <= 4096:
            full = np.zeros((hi - lo + 1, self.N, self.N), dtype=complex)
            for i in range(la):
                full[i: i + lb] += np.matmul(self._c[i][None], other._c)
        else:
            M = _fft_size(hi - lo + 1)
            prod = self.samples(M) @ other.samples(M)
            f = np.fft.fft(prod, axis=0) / M
            full = f[np.arange(lo, hi + 1) % M]
        out = np.zeros((d_neg + d_pos + 1, self.N, self.N), dtype=complex)
        a = max(lo, -d_neg)
        b = min(hi, d_pos)
        if a <= b:
            out[a + d_neg: b + d_neg + 1] = full[a - lo: b - lo + 1]
        keep = np.zeros(hi - lo + 1, dtype=bool)
        if a <= b:
            keep[a - lo: b - lo + 1] = True
        dropped = float(np.max(np.abs(full[~keep]), initial=0.0))
        return TwistedLoop(out, d_neg, d_pos,
                           dropped=max(dropped, self.dropped, other.dropped))

    def __matmul__(self, other):
        if isinstance(other, TwistedLoop):
            return self.multiply(other)
        return NotImplemented

    def __add__(self, other):
        self._check(other)
        d_neg = max(self.d_neg, other.d_neg)
        d_pos = max(self.d_pos, other.d_pos)
        c = np.zeros((d_neg + d_pos + 1, self.N, self.N), dtype=complex)
        c[d_neg - self.d_neg: d_neg + self.d_pos + 1] += self._c
        c[d_neg - other.d_neg: d_neg + other.d_pos + 1] += other._c
        return TwistedLoop(c, d_neg, d_pos, max(self.dropped, other.dropped))

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, alpha):
        return TwistedLoop(alpha * self._c, self.d_neg, self.d_pos, self.dropped)

    def invert(self, samples=None, d_neg=None, d_pos=None, cond_limit=1e13):
        """Inverse by pointwise inversion at ``2^k`` unit-circle samples.

        Returns the loop; the residual ``||a a^{-1} - I||`` over the samples is
        available via :func:`product_residual`.
        """
        if d_neg is None:
            d_neg = self.d_neg
        if d_pos is None:
            d_pos = self.d_pos
        M = samples or _fft_size(4 * (self.d_neg + self.d_pos + d_neg + d_pos + 1), 64)
        vals = self.samples(M)
        conds = np.linalg.cond(vals)
        if not np.all(np.isfinite(conds)) or np.max(conds) > cond_limit:
            raise SingularLoop(f"loop not invertible on the unit circle (cond {np.max(conds):.3g})")
        inv = np.linalg.inv(vals)
        out = TwistedLoop.from_samples(inv, d_neg, d_pos)
        out.dropped = max(out.dropped, self.dropped)
        return out

    def group_inverse(self):
        """Exact inverse for group-valued loops: ``I a^t I`` coefficientwise."""
        return TwistedLoop(group_inverse(self._c), self.d_neg, self.d_pos, self.dropped)

    def tau(self):
        """Reality involution ``c_j -> conj(c_{-j})``; on the circle ``conj(a(lambda))``."""
        return TwistedLoop(np.conj(self._c[::-1]), self.d_pos, self.d_neg, self.dropped)

    def truncate(self, d_neg, d_pos):
        c = np.zeros((d_neg + d_pos + 1, self.N, self.N), dtype=complex)
        a = max(-d_neg, -self.d_neg)
        b = min(d_pos, self.d_pos)
        c[a + d_neg: b + d_neg + 1] = self._c[a + self.d_neg: b + self.d_neg + 1]
        rest = [self.coeff(j) for j in self.powers if j < -d_neg or j > d_pos]
        dropped = max([float(np.max(np.abs(r))) for r in rest], default=0.0)
        return TwistedLoop(c, d_neg, d_pos, max(dropped, self.dropped))

    def trim(self, tol=1e-15):
        """Drop outer coefficients whose entries are all below ``tol``."""
        mags = np.max(np.abs(self._c), axis=(1, 2))
        big = np.nonzero(mags > tol)[0]
        if big.size == 0:
            return self.truncate(0, 0)
        d_neg = max(0, self.d_neg - big[0])
        d_pos = max(0, big[-1] - self.d_neg)
        return self.truncate(d_neg, d_pos)

    # classification -------------------------------------------------------
    def reality_defect(self):
        t = self.tau()
        return float(np.max(np.abs((self - t).coeffs)))

    def loop_class(self, tol=1e-12):
        """One of ``minus_star``, ``minus``, ``plus``, ``real``, ``general``."""
        neg = max((np.max(np.abs(self.coeff(j))) for j in range(-self.d_neg, 0)), default=0.0)
        pos = max((np.max(np.abs(self.coeff(j))) for j in range(1, self.d_pos + 1)), default=0.0)
        if pos <= tol:
            if np.max(np.abs(self.coeff(0) - np.eye(self.N))) <= tol:
                return "minus_star"
            return "minus"
        if neg <= tol:
            return "plus"
        if self.reality_defect() <= tol:
            return "real"
        return "general"

    def max_abs(self):
        return float(np.max(np.abs(self._c)))

    # serialization ----------------------------------------------------------
    def to_json_dict(self):
        return {
            "n": self.n,
            "d_neg": self.d_neg,
            "d_pos": self.d_pos,
            "coeffs": [
                {"power": int(j),
                 "matrix": [[[float(x.real), float(x.imag)] for x in row]
                            for row in self.coeff(j)]}
                for j in self.powers
            ],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_json_dict(), **kw)

    @classmethod
    def from_json_dict(cls, doc):
        n = int(doc["n"])
        d_neg = int(doc["d_neg"])
        d_pos = int(doc["d_pos"])
        N = n + 4
        c = np.zeros((d_neg + d_pos + 1, N, N), dtype=complex)
        for entry in doc["coeffs"]:
            j = int(entry["power"])
            if not -d_neg <= j <= d_pos:
                raise DomainError(f"power {j} outside declared degrees")
            m = np.asarray(entry["matrix"], dtype=float)
            if m.shape != (N, N, 2):
                raise DomainError(f"coefficient {j} has shape {m.shape[:2]}, expected {(N, N)}")
            c[j + d_neg] = m[..., 0] + 1j * m[..., 1]
        return cls(c, d_neg, d_pos)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


def multiply(a, b, d_neg=None, d_pos=None):
    return a.multiply(b, d_neg, d_pos)


def invert(a, samples=None):
    return a.invert(samples)


def evaluate(a, lam):
    return a.evaluate(lam)


def tau(a):
    return a.tau()


def product_residual(factors, target, M=16):
    """Max entry of ``prod(factors) - target`` over ``M`` unit-circle samples."""
    vals = factors[0].samples(M)
    for f in factors[1:]:
        vals = vals @ f.samples(M)
    tv = target.samples(M) if isinstance(target, TwistedLoop) else np.asarray(target)
    return float(np.max(np.abs(vals - tv)))


def random_twisted_algebra_loop(n, degree, rng, norm=0.5):
    """Random twisted loop in the Lie algebra with Wiener norm ``norm``.

    Coefficients satisfy ``X_j^t I + I X_j = 0`` and the twist parity.
    """
    from .linalg import random_algebra_element
    N = n + 4
    even, odd = parity_masks(N)
    c = np.zeros((2 * degree + 1, N, N), dtype=complex)
    for i, j in enumerate(range(-degree, degree + 1)):
        X = random_algebra_element(n, rng)
        c[i] = X * (even if j % 2 == 0 else odd)
    total = sum(np.linalg.norm(ci, 2) for ci in c)
    return TwistedLoop(c * (norm / total), degree, degree)


def loop_exp(X, tail_tol=1e-15, max_degree=512):
    """``exp`` of an algebra-valued loop, pointwise on the circle.

    The degree of the result grows until the discarded tail is below
    ``tail_tol`` relative to the largest coefficient.
    """
    from .linalg import matrix_exp
    M = _fft_size(4 * (X.d_neg + X.d_pos + 1), 64)
    while True:
        vals = matrix_exp(X.samples(M))
        f = np.fft.fft(vals, axis=0) / M
        mags = np.max(np.abs(f), axis=(1, 2))
        half = M // 2
        d = half - 1
        # smallest symmetric degree with tail below tolerance
        for k in range(1, half):
            tail = max(np.max(mags[k + 1: half], initial=0.0),
                       np.max(mags[half: M - k], initial=0.0))
            if tail <= tail_tol * mags.max():
                d = k
                break
        if d < half // 2 or M >= 2 * max_degree:
            return TwistedLoop.from_samples(vals, d, d)
        M *= 2
