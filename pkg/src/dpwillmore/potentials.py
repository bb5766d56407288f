"""Potentials: data model, text format, validators, constructors, classifier.

A potential is a ``(1,0)``-form ``eta = sum_j lambda^j eta_j(z) dz`` whose
coefficients are ``(n+4) x (n+4)`` matrices of rational functions.  Odd
powers live in the off-diagonal blocks, even powers in the diagonal blocks.

Text format::

    potential { n = 4; kind = normalized; basepoint = (0, 0); }
    coeff[-1] {
      B1 = [[i*z, -z, -0.5*i, 0.5], ...];   # 4 x n block
    }

``B1`` fills the upper-right block and ``-B1^t I_{1,3}`` the lower-left one,
``A1`` and ``A2`` the diagonal blocks, ``FULL`` the whole matrix.  Repeated
assignments add up.
"""
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NullConditionViolated, PotentialSyntaxError
from .linalg import I13, k_mask
from .rational import RationalExpr, RationalMatrix

KINDS = ("normalized", "holomorphic", "constant")
SAMPLE_COUNT = 20
SAMPLE_SEED = 20240611


class PotentialDimensionError(PotentialSyntaxError):
    """A matrix literal has the wrong shape for its block."""


class ZeroPolynomialDivision(PotentialSyntaxError):
    """An expression divides by the zero polynomial."""


# ---------------------------------------------------------------------------
# data model

class Potential:
    """Matrix-valued (1,0)-form, one :class:`RationalMatrix` per power of lambda."""

    def __init__(self, n, terms, basepoint=0j, kind="normalized"):
        if int(n) < 1:
            raise DomainError("n must be >= 1")
        if kind not in KINDS:
            raise DomainError(f"unknown potential kind {kind!r}")
        self.n = int(n)
        self.kind = kind
        self.basepoint = complex(basepoint)
        self.terms = {}
        for j, m in sorted(terms.items()):
            m = m if isinstance(m, RationalMatrix) else RationalMatrix(m)
            if m.shape != (self.N, self.N):
                raise DomainError(f"term {j} has shape {m.shape}, expected {(self.N, self.N)}")
            if j < -1:
                raise DomainError("potentials have lambda powers >= -1")
            self.terms[int(j)] = m

    @property
    def N(self):
        return self.n + 4

    def coefficient(self, j, z):
        """``eta_j`` evaluated at ``z`` (zero if absent)."""
        z = np.asarray(z, dtype=complex)
        if j in self.terms:
            return self.terms[j](z)
        return np.zeros(z.shape + (self.N, self.N), dtype=complex)

    def eta(self, z, lam):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (self.N, self.N), dtype=complex)
        for j, m in self.terms.items():
            out = out + lam ** j * m(z)
        return out

    def B1(self, z):
        """Upper-right ``4 x n`` block of the ``lambda^{-1}`` coefficient."""
        return self.coefficient(-1, z)[..., :4, 4:]

    def poles(self):
        ps = [m.poles() for m in self.terms.values()]
        ps = [p for p in ps if p.size]
        if not ps:
            return np.zeros(0, dtype=complex)
        allp = np.concatenate(ps)
        # merge numerically identical roots
        out = []
        for p in allp:
            if not any(abs(p - q) < 1e-9 * max(1.0, abs(q)) for q in out):
                out.append(p)
        return np.array(out)

    def is_zero(self):
        return all(m.is_zero() for m in self.terms.values())

    def is_constant(self):
        return all(m.is_constant() for m in self.terms.values())

    def sample_points(self, count=SAMPLE_COUNT, radius=1.0, seed=SAMPLE_SEED):
        """Seeded random points in a disc about the basepoint, away from poles."""
        rng = np.random.default_rng(seed)
        poles = self.poles()
        pts = []
        while len(pts) < count:
            r = radius * np.sqrt(rng.uniform())
            z = self.basepoint + r * np.exp(2j * np.pi * rng.uniform())
            if poles.size == 0 or np.min(np.abs(poles - z)) > 1e-3:
                pts.append(z)
        return np.array(pts)

    def to_text(self):
        return format_potential(self)

    def __repr__(self):
        return (f"Potential(n={self.n}, kind={self.kind!r}, basepoint={self.basepoint}, "
                f"powers={sorted(self.terms)})")


def b1_to_full(B1):
    """Assemble the off-diagonal matrix ``[[0, B1], [-B1^t I13, 0]]``."""
    B1 = np.asarray(B1, dtype=object if _is_symbolic(B1) else complex)
    n = B1.shape[1]
    N = n + 4
    if B1.dtype == object:
        out = np.empty((N, N), dtype=object)
        out[:] = RationalExpr([0.0])
        out[:4, 4:] = B1
        sign = np.array([1, -1, -1, -1])
        for a in range(n):
            for b in range(4):
                out[4 + a, b] = B1[b, a] * float(sign[b])
        return RationalMatrix(out)
    out = np.zeros(B1.shape[:-2] + (N, N), dtype=complex)
    out[..., :4, 4:] = B1
    out[..., 4:, :4] = -np.swapaxes(B1, -1, -2) @ I13
    return out


def _is_symbolic(x):
    arr = np.asarray(x, dtype=object)
    return any(isinstance(e, (RationalExpr, str)) for e in arr.flat)


def normalized_potential(B1, basepoint=0j):
    """Normalized potential ``lambda^{-1} [[0, B1], [-B1^t I13, 0]] dz``."""
    B1 = np.array([[RationalExpr.coerce(e) for e in row] for row in B1], dtype=object)
    if B1.shape[0] != 4:
        raise DomainError("B1 must have 4 rows")
    return Potential(B1.shape[1], {-1: b1_to_full(B1)}, basepoint, "normalized")


def constant_potential(eta_m1, eta_0=None, basepoint=0j, extra=None):
    """Constant potential ``(lambda^{-1} eta_m1 + eta_0 + ...) dz`` from numeric matrices."""
    eta_m1 = np.asarray(eta_m1, dtype=complex)
    terms = {-1: RationalMatrix.constant(eta_m1)}
    if eta_0 is not None:
        terms[0] = RationalMatrix.constant(eta_0)
    for j, m in (extra or {}).items():
        terms[j] = RationalMatrix.constant(m)
    return Potential(eta_m1.shape[0] - 4, terms, basepoint, "constant")


# ---------------------------------------------------------------------------
# tokenizer and parser

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}\[\](),;=+\-*/^])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text):
    toks = []
    pos = 0
    line, col = 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PotentialSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None, cls=PotentialSyntaxError):
        t = tok or self.tok
        found = t.text if t.kind != "eof" else "end of input"
        raise cls(f"{msg}, found {found!r}", t.line, t.col)

    def advance(self):
        t = self.tok
        self.i += 1
        return t

    def expect(self, text=None, kind=None):
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            self.error(f"expected {text or kind!r}")
        return self.advance()

    def accept(self, text):
        if self.tok.text == text and self.tok.kind == "punct":
            return self.advance()
        return None

    # grammar ------------------------------------------------------------
    def signed_number(self):
        neg = False
        if self.accept("-"):
            neg = True
        elif self.accept("+"):
            pass
        t = self.expect(kind="number")
        v = float(t.text)
        return -v if neg else v

    def signed_int(self):
        neg = bool(self.accept("-"))
        if not neg:
            self.accept("+")
        t = self.expect(kind="number")
        if not re.fullmatch(r"\d+", t.text):
            self.error("expected an integer", t)
        return -int(t.text) if neg else int(t.text)

    def header(self):
        self.expect("potential")
        self.expect("{")
        self.expect("n")
        self.expect("=")
        n_tok = self.tok
        n = self.signed_int()
        if n < 1:
            self.error("n must be a positive integer", n_tok)
        self.expect(";")
        self.expect("kind")
        self.expect("=")
        k_tok = self.expect(kind="ident")
        if k_tok.text not in KINDS:
            self.error(f"kind must be one of {', '.join(KINDS)}", k_tok)
        self.expect(";")
        self.expect("basepoint")
        self.expect("=")
        self.expect("(")
        re_ = self.signed_number()
        self.expect(",")
        im_ = self.signed_number()
        self.expect(")")
        self.expect(";")
        self.expect("}")
        return n, k_tok.text, complex(re_, im_)

    def expr(self):
        left = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "punct":
            op = self.advance().text
            right = self.term()
            left = left + right if op == "+" else left - right
        return left

    def term(self):
        left = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "punct":
            op_tok = self.advance()
            right = self.unary()
            if op_tok.text == "*":
                left = left * right
            else:
                if right.is_zero():
                    self.error("division by the zero polynomial", op_tok, ZeroPolynomialDivision)
                left = left / right
        return left

    def unary(self):
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            k_tok = self.tok
            k = self.signed_int()
            if k < 0 and base.is_zero():
                self.error("negative power of the zero polynomial", k_tok, ZeroPolynomialDivision)
            base = base ** k
        return base

    def atom(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return RationalExpr([float(t.text)])
        if t.kind == "ident" and t.text == "i":
            self.advance()
            return RationalExpr([1j])
        if t.kind == "ident" and t.text == "z":
            self.advance()
            return RationalExpr.z()
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error("expected a number, 'i', 'z' or '('")

    def matrix(self):
        start = self.expect("[")
        rows = [self.row()]
        while self.accept(","):
            rows.append(self.row())
        self.expect("]")
        width = len(rows[0])
        for r in rows:
            if len(r) != width:
                self.error("ragged matrix literal", start, PotentialDimensionError)
        return rows, start

    def row(self):
        self.expect("[")
        vals = [self.expr()]
        while self.accept(","):
            vals.append(self.expr())
        self.expect("]")
        return vals

    def parse(self):
        n, kind, base = self.header()
        N = n + 4
        acc = {}
        nblocks = 0
        while self.tok.kind != "eof":
            self.expect("coeff")
            self.expect("[")
            j = self.signed_int()
            self.expect("]")
            self.expect("{")
            mat = acc.setdefault(j, _zero_object(N))
            while not (self.tok.kind == "punct" and self.tok.text == "}"):
                name_tok = self.expect(kind="ident")
                if name_tok.text not in ("B1", "A1", "A2", "FULL"):
                    self.error("expected B1, A1, A2 or FULL", name_tok)
                self.expect("=")
                rows, start = self.matrix()
                self.expect(";")
                _assign(mat, name_tok.text, rows, n, start)
            self.expect("}")
            nblocks += 1
        if nblocks == 0:
            self.error("expected at least one coeff block")
        for j in acc:
            if j < -1:
                raise PotentialSyntaxError(f"lambda power {j} < -1 is not allowed", 0, 0)
        return Potential(n, {j: RationalMatrix(m) for j, m in acc.items()}, base, kind)


def _zero_object(N):
    m = np.empty((N, N), dtype=object)
    for idx in np.ndindex(m.shape):
        m[idx] = RationalExpr([0.0])
    return m


def _assign(mat, name, rows, n, tok):
    shapes = {"B1": (4, n), "A1": (4, 4), "A2": (n, n), "FULL": (n + 4, n + 4)}
    want = shapes[name]
    got = (len(rows), len(rows[0]))
    if got != want:
        raise PotentialDimensionError(f"{name} must be {want[0]}x{want[1]}, got {got[0]}x{got[1]}",
                                      tok.line, tok.col)
    sign = [1.0, -1.0, -1.0, -1.0]
    if name == "B1":
        for a in range(4):
            for b in range(n):
                mat[a, 4 + b] = mat[a, 4 + b] + rows[a][b]
                mat[4 + b, a] = mat[4 + b, a] + rows[a][b] * sign[a]
    elif name == "A1":
        for a in range(4):
            for b in range(4):
                mat[a, b] = mat[a, b] + rows[a][b]
    elif name == "A2":
        for a in range(n):
            for b in range(n):
                mat[4 + a, 4 + b] = mat[4 + a, 4 + b] + rows[a][b]
    else:
        for a in range(n + 4):
            for b in range(n + 4):
                mat[a, b] = mat[a, b] + rows[a][b]


def parse_potential(text):
    """Parse the potential text format into a :class:`Potential`."""
    return _Parser(text).parse()


def load_potential(path):
    with open(path, encoding="utf-8") as fh:
        return parse_potential(fh.read())


def parse_expression(text):
    """Parse a single rational expression in ``z``."""
    p = _Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error("unexpected trailing input")
    return e


def format_potential(p):
    """Serialize to the text format (odd powers as B1 when possible)."""
    n = p.n
    lines = [f"potential {{ n = {n}; kind = {p.kind}; "
             f"basepoint = ({p.basepoint.real!r}, {p.basepoint.imag!r}); }}"]
    for j, m in sorted(p.terms.items()):
        lines.append(f"coeff[{j}] {{")
        e = m.entries
        if j % 2:
            B1 = e[:4, 4:]
            if b1_to_full(B1).equals(m):
                lines.append("  B1 = " + _mat_text(B1) + ";")
            else:
                lines.append("  FULL = " + _mat_text(e) + ";")
        else:
            if all(x.is_zero() for x in e[:4, 4:].flat) and all(x.is_zero() for x in e[4:, :4].flat):
                lines.append("  A1 = " + _mat_text(e[:4, :4]) + ";")
                lines.append("  A2 = " + _mat_text(e[4:, 4:]) + ";")
            else:
                lines.append("  FULL = " + _mat_text(e) + ";")
        lines.append("}")
    return "\n".join(lines) + "\n"


def _mat_text(e):
    rows = ["[" + ", ".join(x.to_text() for x in row) + "]" for row in e]
    return "[" + ",\n       ".join(rows) + "]"


# ---------------------------------------------------------------------------
# validators

@dataclass
class ValidationReport:
    ok: bool
    residuals: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)

    def to_json_dict(self):
        return {"ok": self.ok, "residuals": {k: float(v) for k, v in self.residuals.items()},
                "messages": list(self.messages)}


def structure_residuals(p, zs=None):
    """Algebra-condition and parity residuals over sample points."""
    zs = p.sample_points() if zs is None else zs
    d = np.ones(p.N)
    d[0] = -1.0
    even = k_mask(p.N)
    alg = 0.0
    par = 0.0
    for j in p.terms:
        X = p.coefficient(j, zs)
        scale = max(1.0, float(np.max(np.abs(X))))
        R = np.swapaxes(X, -1, -2) * d[None, :] + d[:, None] * X
        alg = max(alg, float(np.max(np.abs(R))) / scale)
        bad = np.where(even, 0, X) if j % 2 == 0 else np.where(even, X, 0)
        par = max(par, float(np.max(np.abs(bad))) / scale)
    return alg, par


def validate_potential(p, tol=1e-12):
    """Generic checks: algebra condition, parity and kind consistency."""
    alg, par = structure_residuals(p)
    msgs = []
    if alg > tol:
        msgs.append(f"algebra condition violated ({alg:.3g})")
    if par > 0:
        msgs.append(f"parity violated ({par:.3g})")
    if p.kind == "normalized" and set(p.terms) - {-1}:
        msgs.append("normalized potential has powers other than -1")
    if p.kind == "constant" and not p.is_constant():
        msgs.append("constant potential has z-dependent entries")
    return ValidationReport(not msgs, {"algebra": alg, "parity": par}, msgs)


def validate_normalized(p, tol=1e-12):
    """Null condition ``B1^t I13 B1 = 0`` and nilpotency ``eta_{-1}^3 = 0`` at samples.

    Residuals are scaled by ``max(1, |B1|^2)`` (resp. ``|eta|^3``) so that
    they are meaningful for large entries.
    """
    zs = p.sample_points()
    base = validate_potential(p, tol)
    msgs = list(base.messages)
    if p.kind != "normalized":
        msgs.append(f"kind is {p.kind!r}, not 'normalized'")
    B = p.B1(zs)
    E = p.coefficient(-1, zs)
    sB = np.maximum(1.0, np.max(np.abs(B), axis=(-1, -2)))
    null = np.swapaxes(B, -1, -2) @ I13 @ B
    null_res = float(np.max(np.max(np.abs(null), axis=(-1, -2)) / sB ** 2))
    sE = np.maximum(1.0, np.max(np.abs(E), axis=(-1, -2)))
    nil = E @ E @ E
    nil_res = float(np.max(np.max(np.abs(nil), axis=(-1, -2)) / sE ** 3))
    if null_res > tol:
        msgs.append(f"null condition B1^t I B1 = 0 violated ({null_res:.3g})")
    if nil_res > tol:
        msgs.append(f"eta_-1^3 = 0 violated ({nil_res:.3g})")
    res = dict(base.residuals)
    res.update({"null_condition": null_res, "nilpotency": nil_res})
    return ValidationReport(not msgs, res, msgs)


# ---------------------------------------------------------------------------
# constructors

def make_isotropic_potential(f11, f21, f31, f41, basepoint=0j):
    """Isotropic potential in S^4: ``B1 = (v, i v)``, ``v`` null."""
    v = [RationalExpr.coerce(f) for f in (f11, f21, f31, f41)]
    q = -(v[0] * v[0]) + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]
    zs = Potential(1, {}, basepoint).sample_points()
    poles = np.concatenate([f.poles() for f in v] + [np.zeros(0)])
    zs = np.array([z for z in zs if poles.size == 0 or np.min(np.abs(poles - z)) > 1e-3])
    scale = max(1.0, max(float(np.max(np.abs(f(zs)))) for f in v))
    if float(np.max(np.abs(q(zs)))) > 1e-12 * scale ** 2:
        raise NullConditionViolated("-f11^2 + f21^2 + f31^2 + f41^2 does not vanish")
    B1 = [[v[a], v[a] * 1j] for a in range(4)]
    return normalized_potential(B1, basepoint)


def make_lightlike_potential(f1, f3, basepoint=0j):
    """Potential containing a constant light-like vector: rows ``(f1; -f1; f3; i f3)``."""
    f1 = [RationalExpr.coerce(f) for f in f1]
    f3 = [RationalExpr.coerce(f) for f in f3]
    if len(f1) != len(f3) or not f1:
        raise DomainError("f1 and f3 must be rows of equal positive length")
    B1 = [f1, [-f for f in f1], f3, [f * 1j for f in f3]]
    return normalized_potential(B1, basepoint)


# ---------------------------------------------------------------------------
# classification

def _signed_row_conjugations():
    """Row maps ``B -> k B`` for ``k`` permuting/flipping the spatial axes 1..3."""
    import itertools
    out = []
    for perm in itertools.permutations((1, 2, 3)):
        for signs in itertools.product((1, -1), repeat=3):
            k = np.zeros((4, 4))
            k[0, 0] = 1
            for a, (b, s) in enumerate(zip(perm, signs)):
                k[a + 1, b] = s
            out.append(k)
    return out


def numerical_rank(B, rtol=1e-9):
    s = np.linalg.svd(B, compute_uv=False)
    return int(np.sum(s > rtol * max(1.0, s[0] if s.size else 0.0)))


def _lightlike_pattern(B, tol):
    s = max(1.0, np.max(np.abs(B)))
    return (np.max(np.abs(B[1] + B[0])) <= tol * s and np.max(np.abs(B[3] - 1j * B[2])) <= tol * s)


def _isotropic_pattern(B, tol):
    if B.shape[1] != 2:
        return False
    s = max(1.0, np.max(np.abs(B)))
    return (np.max(np.abs(B[:, 1] - 1j * B[:, 0])) <= tol * s
            or np.max(np.abs(B[:, 1] + 1j * B[:, 0])) <= tol * s)


def classify_potential(p, tol=1e-9):
    """Pattern classification of a normalized potential.

    Returns ``(tag, info)`` with ``tag`` one of ``isotropic_form``,
    ``reducible_rank1``, ``lightlike_form`` or ``generic`` (checked in that
    order).  Constant spatial
    rotations of the Lorentz block (signed permutations) are tried; a
    ``generic`` answer is not a proof that no other conjugation works.
    """
    zs = p.sample_points()
    Bs = p.B1(zs)
    rank = max(numerical_rank(B) for B in Bs)
    info = {"rank": rank}
    if all(_isotropic_pattern(B, tol) for B in Bs):
        return "isotropic_form", info
    for k in _signed_row_conjugations():
        kB = k @ Bs
        if all(_lightlike_pattern(B, tol) for B in kB):
            top = max(float(np.max(np.abs(B[:2]))) for B in kB)
            bot = max(float(np.max(np.abs(B[2:]))) for B in kB)
            scale = max(1.0, max(float(np.max(np.abs(B))) for B in kB))
            info["conjugation"] = k.tolist()
            if rank <= 1 and (top <= tol * scale or bot <= tol * scale):
                return "reducible_rank1", info
            return "lightlike_form", info
    return "generic", info


# ---------------------------------------------------------------------------
# gauge transformations

class PlusGauge:
    """z-dependent plus loop ``w = sum_{k>=0} lambda^k w_k(z)``, rational entries."""

    def __init__(self, terms):
        self.terms = {int(k): (m if isinstance(m, RationalMatrix) else RationalMatrix(m))
                      for k, m in terms.items()}
        if any(k < 0 for k in self.terms):
            raise DomainError("a plus loop has only non-negative powers")

    @property
    def N(self):
        return next(iter(self.terms.values())).shape[0]

    @property
    def degree(self):
        return max(self.terms)

    def term(self, k):
        return self.terms.get(k, RationalMatrix.zeros(self.N))

    def __call__(self, z, lam):
        z = np.asarray(z, dtype=complex)
        return sum(lam ** k * m(z) for k, m in self.terms.items())

    def is_group_valued(self, zs, tol=1e-12):
        d = np.ones(self.N)
        d[0] = -1.0
        worst = 0.0
        for lam in np.exp(2j * np.pi * np.arange(5) / 5):
            W = self(zs, lam)
            R = np.swapaxes(W, -1, -2) * d[..., None, :] @ W - np.diag(d)
            worst = max(worst, float(np.max(np.abs(R))) / max(1.0, float(np.max(np.abs(W)))) ** 2)
        return worst <= tol


def _series_inverse(w, degree):
    """Formal inverse of a plus loop up to ``lambda^degree``."""
    N = w.N
    zs = np.array([0.3 + 0.2j, -0.7 + 0.1j, 0.5 - 0.6j])
    if w.is_group_valued(zs):
        d = np.ones(N)
        d[0] = -1.0
        D = RationalMatrix.constant(np.diag(d))
        return {k: D @ m.transpose() @ D for k, m in w.terms.items()}
    w0 = w.term(0)
    if not w0.is_constant():
        raise DomainError("gauge with non-constant leading term must be group valued")
    W0 = w0(0.0)
    if abs(np.linalg.det(W0)) < 1e-14:
        raise DomainError("non-invertible leading term of the gauge")
    inv0 = RationalMatrix.constant(np.linalg.inv(W0))
    u = {0: inv0}
    for k in range(1, degree + 1):
        acc = RationalMatrix.zeros(N)
        for j in range(1, k + 1):
            if j in w.terms:
                acc = acc + w.terms[j] @ u[k - j]
        u[k] = -(inv0 @ acc)
    return u


def gauge_transform(p, w, max_degree=None):
    """Gauge ``p -> w^{-1} p w + w^{-1} dw`` for a plus loop ``w``.

    The result is returned with ``kind = holomorphic`` (``constant`` when
    every entry is constant), truncated to lambda powers ``<= max_degree``
    (default: the exact degree when ``w`` is group valued).
    """
    if not isinstance(w, PlusGauge):
        w = PlusGauge(w)
    if w.N != p.N:
        raise DomainError("gauge size does not match the potential")
    top_p = max(p.terms) if p.terms else 0
    if max_degree is None:
        max_degree = top_p + 2 * w.degree
    winv = _series_inverse(w, max_degree + 1)
    dw = {k: m.derivative() for k, m in w.terms.items()}
    out = {}

    def add(j, m):
        if j > max_degree or m.is_zero():
            return
        out[j] = out[j] + m if j in out else m

    for a, ua in winv.items():
        for j, pj in p.terms.items():
            upj = ua @ pj
            for b, wb in w.terms.items():
                if a + j + b <= max_degree:
                    add(a + j + b, upj @ wb)
        for b, dwb in dw.items():
            if a + b <= max_degree:
                add(a + b, ua @ dwb)
    kind = "constant" if all(m.is_constant() for m in out.values()) else "holomorphic"
    if not out:
        out = {-1: RationalMatrix.zeros(p.N)}
    return Potential(p.n, out, p.basepoint, kind)
