"""Rational functions of one complex variable with complex coefficients.

Coefficients are stored lowest degree first (numpy.polynomial convention).
No gcd reduction is attempted; a constant denominator is folded into the
numerator so that polynomials round-trip through text exactly.
"""
import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError


def _trim(c):
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        return np.zeros(1, dtype=complex)
    return c[: nz[-1] + 1].copy()


class RationalExpr:
    """``num(z) / den(z)``."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=(1.0,)):
        num = _trim(num)
        den = _trim(den)
        if not np.any(den):
            raise ZeroDivisionError("division by the zero polynomial")
        if den.size == 1 and den[0] != 1:
            num = num / den[0]
            den = np.ones(1, dtype=complex)
        if not np.any(num):
            den = np.ones(1, dtype=complex)
        self.num = num
        self.den = den

    @classmethod
    def coerce(cls, x):
        if isinstance(x, RationalExpr):
            return x
        if isinstance(x, str):
            from .potentials import parse_expression
            return parse_expression(x)
        if np.isscalar(x):
            return cls([complex(x)])
        raise DomainError(f"cannot interpret {x!r} as a rational expression")

    @classmethod
    def z(cls):
        return cls([0.0, 1.0])

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        o = RationalExpr.coerce(other)
        if self.den.size == 1 and o.den.size == 1:
            return RationalExpr(P.polyadd(self.num, o.num))
        return RationalExpr(P.polyadd(P.polymul(self.num, o.den), P.polymul(o.num, self.den)),
                            P.polymul(self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr(-self.num, self.den)

    def __sub__(self, other):
        return self + (-RationalExpr.coerce(other))

    def __rsub__(self, other):
        return RationalExpr.coerce(other) - self

    def __mul__(self, other):
        o = RationalExpr.coerce(other)
        return RationalExpr(P.polymul(self.num, o.num), P.polymul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = RationalExpr.coerce(other)
        if o.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        return RationalExpr(P.polymul(self.num, o.den), P.polymul(self.den, o.num))

    def __rtruediv__(self, other):
        return RationalExpr.coerce(other) / self

    def __pow__(self, k):
        k = int(k)
        if k < 0:
            return RationalExpr([1.0]) / (self ** (-k))
        return RationalExpr(P.polypow(self.num, k), P.polypow(self.den, k))

    def conj_coeffs(self):
        return RationalExpr(np.conj(self.num), np.conj(self.den))

    def derivative(self):
        if self.den.size == 1:
            return RationalExpr(P.polyder(self.num) if self.num.size > 1 else [0.0])
        dn = P.polyder(self.num) if self.num.size > 1 else np.zeros(1)
        dd = P.polyder(self.den)
        return RationalExpr(P.polysub(P.polymul(dn, self.den), P.polymul(self.num, dd)),
                            P.polymul(self.den, self.den))

    # inspection ---------------------------------------------------------------
    def is_zero(self):
        return not np.any(self.num)

    def is_constant(self):
        return self.num.size == 1 and self.den.size == 1

    def is_polynomial(self):
        return self.den.size == 1

    @property
    def degree(self):
        return max(self.num.size, self.den.size) - 1

    def poles(self):
        if self.den.size <= 1:
            return np.zeros(0, dtype=complex)
        return P.polyroots(self.den)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return P.polyval(z, self.num) / P.polyval(z, self.den)

    def equals(self, other, tol=0.0):
        o = RationalExpr.coerce(other)
        lhs = P.polymul(self.num, o.den)
        rhs = P.polymul(o.num, self.den)
        d = _trim(P.polysub(lhs, rhs))
        return bool(np.max(np.abs(d)) <= tol)

    def __eq__(self, other):
        try:
            return self.equals(other)
        except DomainError:
            return NotImplemented

    __hash__ = None

    def __repr__(self):
        return f"RationalExpr({self.to_text()})"

    # text ---------------------------------------------------------------------
    @staticmethod
    def _num_text(c):
        c = complex(c)
        re = repr(float(c.real))
        im = repr(float(c.imag))
        if c.imag == 0:
            return re if c.real >= 0 else f"({re})"
        if c.real == 0:
            return f"({im}*i)"
        return f"({re} + {im}*i)"

    @classmethod
    def _poly_text(cls, c):
        terms = []
        for k, a in enumerate(c):
            if a == 0:
                continue
            t = cls._num_text(a)
            if k == 1:
                t += "*z"
            elif k > 1:
                t += f"*z^{k}"
            terms.append(t)
        return " + ".join(terms) if terms else "0"

    def to_text(self):
        if self.den.size == 1:
            return self._poly_text(self.num)
        return f"({self._poly_text(self.num)})/({self._poly_text(self.den)})"


class RationalMatrix:
    """Square matrix of :class:`RationalExpr` with vectorized evaluation."""

    def __init__(self, entries):
        e = np.empty(np.shape(entries)[:2], dtype=object)
        for idx in np.ndindex(e.shape):
            e[idx] = RationalExpr.coerce(entries[idx[0]][idx[1]])
        self.entries = e
        self._compiled = None

    @classmethod
    def zeros(cls, N):
        return cls([[0.0] * N for _ in range(N)])

    @classmethod
    def constant(cls, M):
        M = np.asarray(M, dtype=complex)
        return cls([[complex(x) for x in row] for row in M])

    @property
    def shape(self):
        return self.entries.shape

    def __getitem__(self, idx):
        return self.entries[idx]

    def _compile(self):
        if self._compiled is None:
            dn = max(e.num.size for e in self.entries.flat)
            dd = max(e.den.size for e in self.entries.flat)
            num = np.zeros(self.shape + (dn,), dtype=complex)
            den = np.zeros(self.shape + (dd,), dtype=complex)
            for idx in np.ndindex(self.shape):
                e = self.entries[idx]
                num[idx + (slice(0, e.num.size),)] = e.num
                den[idx + (slice(0, e.den.size),)] = e.den
            self._compiled = (num, den)
        return self._compiled

    def __call__(self, z):
        """Evaluate at ``z`` (scalar or array); result has trailing ``N x N``."""
        num, den = self._compile()
        z = np.asarray(z, dtype=complex)
        out_n = np.zeros(z.shape + self.shape, dtype=complex)
        out_d = np.zeros(z.shape + self.shape, dtype=complex)
        zz = z[..., None, None]
        for k in range(num.shape[-1] - 1, -1, -1):
            out_n = out_n * zz + num[..., k]
        for k in range(den.shape[-1] - 1, -1, -1):
            out_d = out_d * zz + den[..., k]
        return out_n / out_d

    def is_zero(self):
        return all(e.is_zero() for e in self.entries.flat)

    def is_constant(self):
        return all(e.is_constant() for e in self.entries.flat)

    def poles(self):
        out = [e.poles() for e in self.entries.flat]
        out = [p for p in out if p.size]
        return np.concatenate(out) if out else np.zeros(0, dtype=complex)

    def max_degree(self):
        return max(e.degree for e in self.entries.flat)

    def __add__(self, other):
        return RationalMatrix(self.entries + other.entries)

    def __sub__(self, other):
        return RationalMatrix(self.entries - other.entries)

    def __neg__(self):
        return RationalMatrix(-self.entries)

    def __matmul__(self, other):
        N = self.shape[0]
        M = other.shape[1]
        out = [[RationalExpr([0.0]) for _ in range(M)] for _ in range(N)]
        for i in range(N):
            for j in range(M):
                acc = RationalExpr([0.0])
                for k in range(self.shape[1]):
                    a = self.entries[i, k]
                    b = other.entries[k, j]
                    if not a.is_zero() and not b.is_zero():
                        acc = acc + a * b
                out[i][j] = acc
        return RationalMatrix(out)

    def scale(self, c):
        return RationalMatrix(self.entries * RationalExpr.coerce(c))

    def derivative(self):
        return RationalMatrix([[e.derivative() for e in row] for row in self.entries])

    def transpose(self):
        return RationalMatrix(self.entries.T)

    def equals(self, other, tol=0.0):
        return all(a.equals(b, tol) for a, b in zip(self.entries.flat, other.entries.flat))
