"""Polynomials in z_1..z_N and their conjugates, with exact coefficients.

A monomial is a :class:`MultiIndex` ``(hol, anti)``: ``hol[j]`` is the power
of ``z_{j+1}`` and ``anti[j]`` the power of ``conj(z_{j+1})``.  Coefficients are
:class:`~crweyl.backend.QQi`.

The text grammar accepted by :func:`poly_parse`::

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary)*
    unary  := '-' unary | power
    power  := atom ('^' INT)?
    atom   := NUMBER | 'i' | 'z'D | 'conj' '(' expr ')' | '(' expr ')'
    NUMBER := digits ('.' digits)? ('/' digits)? 'i'?

so ``3/4i`` is ``(3/4)*i`` and ``-z1^2`` is ``-(z1^2)``.
"""
import itertools
from fractions import Fraction
from typing import NamedTuple

from .backend import QQi
from .errors import ParseError, VarOutOfRange

MAX_VARS = 9


class MultiIndex(NamedTuple):
    hol: tuple
    anti: tuple

    @property
    def order(self):
        return sum(self.hol) + sum(self.anti)

    def conj(self):
        return MultiIndex(self.anti, self.hol)

    def flat(self):
        """Exponent vector over (z_1..z_N, zbar_1..zbar_N)."""
        return self.hol + self.anti

    @classmethod
    def unit(cls, nvars, j, barred=False):
        e = [0] * nvars
        e[j] = 1
        z = (0,) * nvars
        return cls(z, tuple(e)) if barred else cls(tuple(e), z)


_ONE = QQi(1)


class CPolynomial:
    """Immutable sparse polynomial in ``z`` and ``conj(z)``.

    Parameters
    ----------
    terms : dict
        Map ``MultiIndex -> coefficient``; zero coefficients are dropped.
    nvars : int
        Number of complex variables N.
    """

    __slots__ = ("terms", "nvars", "_key")

    def __init__(self, terms, nvars):
        self.nvars = int(nvars)
        clean = {}
        for mi, c in terms.items():
            c = QQi.coerce(c)
            if c:
                mi = mi if isinstance(mi, MultiIndex) else MultiIndex(tuple(mi[0]), tuple(mi[1]))
                clean[mi] = c
        self.terms = clean
        self._key = None

    # constructors -----------------------------------------------------------
    @classmethod
    def constant(cls, c, nvars):
        z = (0,) * nvars
        return cls({MultiIndex(z, z): c}, nvars)

    @classmethod
    def coordinate(cls, j, nvars, barred=False):
        return cls({MultiIndex.unit(nvars, j, barred): 1}, nvars)

    # structure ------------------------------------------------------------
    def key(self):
        if self._key is None:
            self._key = (self.nvars, tuple(sorted(
                (mi, (c.re, c.im)) for mi, c in self.terms.items())))
        return self._key

    def __eq__(self, other):
        return isinstance(other, CPolynomial) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def is_zero(self):
        return not self.terms

    def degree(self):
        return max((mi.order for mi in self.terms), default=0)

    def constant_value(self):
        """Coefficient of the constant monomial if the polynomial is constant, else None."""
        if not self.terms:
            return QQi(0)
        if len(self.terms) == 1:
            (mi, c), = self.terms.items()
            if mi.order == 0:
                return c
        return None

    def as_coordinate(self):
        """``(j, barred)`` if this is exactly one coordinate with coefficient 1."""
        if len(self.terms) != 1:
            return None
        (mi, c), = self.terms.items()
        if c != _ONE or mi.order != 1:
            return None
        if 1 in mi.hol:
            return mi.hol.index(1), False
        return mi.anti.index(1), True

    def is_real(self):
        for mi, c in self.terms.items():
            other = self.terms.get(mi.conj())
            if other is None or other != c.conjugate():
                return False
        return True

    # arithmetic -------------------------------------------------------------
    def _check(self, other):
        if other.nvars != self.nvars:
            raise ValueError("polynomials over different variable counts")

    def __add__(self, other):
        if not isinstance(other, CPolynomial):
            other = CPolynomial.constant(other, self.nvars)
        self._check(other)
        out = dict(self.terms)
        for mi, c in other.terms.items():
            out[mi] = out[mi] + c if mi in out else c
        return CPolynomial(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return CPolynomial({mi: -c for mi, c in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        if not isinstance(other, CPolynomial):
            other = CPolynomial.constant(other, self.nvars)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, CPolynomial):
            c0 = QQi.coerce(other)
            return CPolynomial({mi: c * c0 for mi, c in self.terms.items()}, self.nvars)
        self._check(other)
        out = {}
        for (m1, c1), (m2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            mi = MultiIndex(tuple(a + b for a, b in zip(m1.hol, m2.hol)),
                            tuple(a + b for a, b in zip(m1.anti, m2.anti)))
            c = c1 * c2
            out[mi] = out[mi] + c if mi in out else c
        return CPolynomial(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        out = CPolynomial.constant(1, self.nvars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conj(self):
        return CPolynomial({mi.conj(): c.conjugate() for mi, c in self.terms.items()}, self.nvars)

    def diff(self, j, barred=False):
        """Partial derivative in ``z_{j+1}`` (or its conjugate); ``j`` is 0-based."""
        out = {}
        for mi, c in self.terms.items():
            part = mi.anti if barred else mi.hol
            e = part[j]
            if e == 0:
                continue
            lowered = part[:j] + (e - 1,) + part[j + 1:]
            nmi = MultiIndex(mi.hol, lowered) if barred else MultiIndex(lowered, mi.anti)
            out[nmi] = c * e
        return CPolynomial(out, self.nvars)

    def eval(self, point, backend):
        """Evaluate at ``point`` (sequence of N backend scalars)."""
        pts = [backend.coerce(p) for p in point]
        cps = [p.conjugate() for p in pts]
        total = backend.coerce(0)
        for mi, c in self.terms.items():
            v = backend.coerce(c)
            for j, e in enumerate(mi.hol):
                if e:
                    v = v * pts[j] ** e
            for j, e in enumerate(mi.anti):
                if e:
                    v = v * cps[j] ** e
            total = total + v
        return total

    def __repr__(self):
        return f"CPolynomial({poly_print(self)!r}, nvars={self.nvars})"


# ---------------------------------------------------------------------------
# text I/O


def _fmt_rational(q):
    q = Fraction(int(q.numerator), int(q.denominator))
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_coefficient(c):
    """Grammar-compatible text for an exact complex coefficient."""
    c = QQi.coerce(c)
    if not c.im:
        return _fmt_rational(c.re)
    im = _fmt_rational(abs(c.im)) + "i"
    if not c.re:
        return im if c.im > 0 else "-" + im
    return f"{_fmt_rational(c.re)}{'+' if c.im > 0 else '-'}{im}"


def _monomial_text(mi):
    parts = []
    for j, e in enumerate(mi.hol):
        if e:
            parts.append(f"z{j + 1}" + (f"^{e}" if e > 1 else ""))
    for j, e in enumerate(mi.anti):
        if e:
            parts.append(f"conj(z{j + 1})" + (f"^{e}" if e > 1 else ""))
    return "*".join(parts)


def poly_print(p):
    """Canonical text for ``p``; ``poly_parse(poly_print(p), N) == p``."""
    if not p.terms:
        return "0"
    items = sorted(p.terms.items(), key=lambda kv: (kv[0].order, tuple(-e for e in kv[0].flat())))
    chunks = []
    for mi, c in items:
        mono = _monomial_text(mi)
        if not mono:
            chunks.append(f"({format_coefficient(c)})")
        elif c == _ONE:
            chunks.append(mono)
        else:
            chunks.append(f"({format_coefficient(c)})*{mono}")
    return " + ".join(chunks)


class _Parser:
    def __init__(self, text, nvars):
        self.text = text
        self.nvars = nvars
        self.pos = 0

    def offset(self, pos=None):
        # byte offsets differ from character offsets for non-ASCII input
        pos = self.pos if pos is None else pos
        return len(self.text[:pos].encode("utf-8"))

    def fail(self, msg, pos=None):
        raise ParseError(msg, offset=self.offset(pos))

    def skip(self):
        t = self.text
        while self.pos < len(t) and t[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            found = self.peek() or "end of input"
            self.fail(f"expected {ch!r}, found {found!r}")
        self.pos += 1

    def parse(self):
        if not self.text.strip():
            self.fail("empty expression")
        out = self.expr()
        if self.peek():
            self.fail(f"unexpected {self.peek()!r}")
        return out

    def expr(self):
        out = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self):
        out = self.unary()
        while self.peek() == "*":
            self.pos += 1
            out = out * self.unary()
        return out

    def unary(self):
        if self.peek() == "-":
            self.pos += 1
            return -self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            self.skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                self.fail("expected a nonnegative integer exponent")
            base = base ** int(self.text[start:self.pos])
        return base

    def _digits(self):
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        return self.text[start:self.pos]

    def number(self):
        start = self.pos
        whole = self._digits()
        frac = ""
        if self.pos < len(self.text) and self.text[self.pos] == ".":
            self.pos += 1
            frac = self._digits()
            if not frac:
                self.fail("expected digits after '.'")
        value = Fraction(f"{whole}.{frac}") if frac else Fraction(int(whole))
        if self.pos < len(self.text) and self.text[self.pos] == "/":
            self.pos += 1
            den = self._digits()
            if not den:
                self.fail("expected a denominator")
            if int(den) == 0:
                self.fail("zero denominator", start)
            value = value / int(den)
        if self.pos < len(self.text) and self.text[self.pos] == "i":
            self.pos += 1
            return CPolynomial.constant(QQi(0, value), self.nvars)
        return CPolynomial.constant(value, self.nvars)

    def variable(self, barred):
        start = self.pos
        self.pos += 1  # 'z'
        digits = self._digits()
        if not digits:
            self.fail("expected a variable index after 'z'")
        k = int(digits)
        if k < 1 or k > self.nvars:
            raise VarOutOfRange(f"z{k} outside z1..z{self.nvars} at offset {self.offset(start)}")
        return CPolynomial.coordinate(k - 1, self.nvars, barred)

    def atom(self):
        ch = self.peek()
        t = self.text
        if ch.isdigit():
            return self.number()
        if ch == "(":
            self.pos += 1
            out = self.expr()
            self.expect(")")
            return out
        if t.startswith("conj", self.pos):
            self.pos += 4
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return inner.conj()
        if ch == "z":
            return self.variable(False)
        if ch == "i":
            self.pos += 1
            return CPolynomial.constant(QQi(0, 1), self.nvars)
        if not ch:
            self.fail("unexpected end of input")
        self.fail(f"unexpected {ch!r}")


def poly_parse(text, nvars):
    """Parse grammar text into a :class:`CPolynomial` over ``nvars`` variables."""
    if not 1 <= nvars <= MAX_VARS:
        raise VarOutOfRange(f"nvars must lie in 1..{MAX_VARS}")
    return _Parser(text, nvars).parse()
