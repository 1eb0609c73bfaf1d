"""Scalar backends.

Three kinds of complex scalar are used throughout the package:

``QQi``
    exact Gaussian rationals (pairs of ``gmpy2.mpq``),
``gmpy2.mpc``
    arbitrary-precision floating point, default 128 bits,
``complex``
    native double precision, selected automatically when the requested
    precision is at most 53 bits.  This is the path that uses the compiled
    series kernels.

A :class:`Backend` knows how to coerce numbers into its scalar type and which
numpy dtype holds arrays of them.  Floating backends set the thread-local
gmpy2 context precision when activated.
"""
import cmath
import math
import os
from fractions import Fraction

import gmpy2
import numpy as np

from .errors import BackendError, EvalSingular

DEFAULT_PRECISION = 128


class QQi:
    """Exact complex rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is _MPQ else gmpy2.mpq(re)
        self.im = im if type(im) is _MPQ else gmpy2.mpq(im)

    @classmethod
    def _raw(cls, re, im):
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    @staticmethod
    def coerce(x):
        if type(x) is QQi:
            return x
        if isinstance(x, (int, Fraction)) or type(x) is _MPQ:
            return QQi._raw(gmpy2.mpq(x), _ZERO)
        if isinstance(x, float):
            return QQi._raw(gmpy2.mpq(Fraction(x)), _ZERO)
        if isinstance(x, complex):
            return QQi._raw(gmpy2.mpq(Fraction(x.real)), gmpy2.mpq(Fraction(x.imag)))
        raise BackendError(f"cannot convert {type(x).__name__} to an exact rational")

    # arithmetic -----------------------------------------------------------
    def __add__(self, o):
        if type(o) is not QQi:
            if type(o) is int:
                return QQi._raw(self.re + o, self.im)
            try:
                o = QQi.coerce(o)
            except BackendError:
                return NotImplemented
        return QQi._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        if type(o) is not QQi:
            try:
                o = QQi.coerce(o)
            except BackendError:
                return NotImplemented
        return QQi._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        try:
            o = QQi.coerce(o)
        except BackendError:
            return NotImplemented
        return o - self

    def __mul__(self, o):
        if type(o) is not QQi:
            if type(o) is int or type(o) is _MPQ:
                return QQi._raw(self.re * o, self.im * o)
            try:
                o = QQi.coerce(o)
            except BackendError:
                return NotImplemented
        a, b, c, d = self.re, self.im, o.re, o.im
        if not b:
            return QQi._raw(a * c, a * d)
        if not d:
            return QQi._raw(a * c, b * c)
        return QQi._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if type(o) is not QQi:
            try:
                o = QQi.coerce(o)
            except BackendError:
                return NotImplemented
        c, d = o.re, o.im
        den = c * c + d * d
        if not den:
            raise EvalSingular("exact division by zero")
        a, b = self.re, self.im
        return QQi._raw((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, o):
        return QQi.coerce(o) / self

    def __neg__(self):
        return QQi._raw(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k):
        if not isinstance(k, int):
            raise BackendError("exact backend supports integer powers only")
        if k < 0:
            return QQi._raw(_ONE, _ZERO) / (self ** (-k))
        out = QQi._raw(_ONE, _ZERO)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self):
        return QQi._raw(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __abs__(self):
        return math.sqrt(float(self.abs2()))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, o):
        if type(o) is not QQi:
            try:
                o = QQi.coerce(o)
            except BackendError:
                return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if not self.im:
            return hash(Fraction(int(self.re.numerator), int(self.re.denominator)))
        return hash((self.re, self.im))

    def __repr__(self):
        return f"QQi({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


_MPQ = type(gmpy2.mpq(0))
_ZERO = gmpy2.mpq(0)
_ONE = gmpy2.mpq(1)
_MPC = type(gmpy2.mpc(0))
_MPFR = type(gmpy2.mpfr(0))


def re_part(x):
    return x.real


def im_part(x):
    return x.imag


def to_complex(x):
    """Convert any backend scalar to a Python ``complex``."""
    if type(x) is QQi:
        return complex(x)
    return complex(x)


def magnitude(x):
    """``|x|`` as a float, for tolerance checks."""
    if type(x) is QQi:
        return abs(x)
    return abs(complex(x))


class Backend:
    """Base class; subclasses fix the scalar type."""

    name = "base"
    exact = False
    dtype = object
    precision = 0

    def coerce(self, x):
        raise NotImplementedError

    def activate(self):
        """Make this backend's working precision current."""

    def zeros(self, m):
        out = np.empty(m, dtype=object)
        z = self.coerce(0)
        out.fill(z)
        return out

    def asarray(self, values):
        arr = np.empty(len(values), dtype=object)
        for i, v in enumerate(values):
            arr[i] = self.coerce(v)
        return arr

    def log(self, x):
        raise NotImplementedError

    def pow_rational(self, x, q):
        raise NotImplementedError

    def sqrt_real(self, x):
        raise NotImplementedError

    def key(self):
        return (self.name, self.precision)

    def __repr__(self):
        return f"{type(self).__name__}(precision={self.precision})"


class ExactBackend(Backend):
    name = "exact"
    exact = True

    def coerce(self, x):
        return QQi.coerce(x)

    def log(self, x):
        raise BackendError("log is not exact; rewrite the computation via derivatives")

    def pow_rational(self, x, q):
        q = Fraction(q)
        if q.denominator == 1:
            return QQi.coerce(x) ** q.numerator
        x = QQi.coerce(x)
        if x.im or x.re <= 0:
            raise BackendError("exact rational power needs a positive rational base")
        num, den = int(x.re.numerator), int(x.re.denominator)
        rn, rd = _int_root(num, q.denominator), _int_root(den, q.denominator)
        if rn is None or rd is None:
            raise BackendError("rational power has no exact value")
        return QQi(Fraction(rn, rd)) ** q.numerator

    def sqrt_real(self, x):
        return self.pow_rational(x, Fraction(1, 2))


def _int_root(n, k):
    r = int(round(n ** (1.0 / k))) if n else 0
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** k == n:
            return c
    return None


class MPBackend(Backend):
    """``gmpy2.mpc`` scalars at a fixed binary precision."""

    name = "mp"

    def __init__(self, precision=DEFAULT_PRECISION):
        self.precision = int(precision)

    def activate(self):
        ctx = gmpy2.get_context()
        if ctx.precision != self.precision:
            ctx.precision = self.precision
            ctx.real_prec = ctx.imag_prec = self.precision

    def coerce(self, x):
        t = type(x)
        if t is _MPC:
            return x
        if t is QQi:
            return gmpy2.mpc(gmpy2.mpfr(x.re), gmpy2.mpfr(x.im))
        if t is int or t is _MPQ or isinstance(x, Fraction):
            return gmpy2.mpc(gmpy2.mpfr(gmpy2.mpq(x)))
        return gmpy2.mpc(x)

    def log(self, x):
        if not x:
            raise EvalSingular("log of zero")
        return gmpy2.log(self.coerce(x))

    def pow_rational(self, x, q):
        q = Fraction(q)
        x = self.coerce(x)
        if q.denominator == 1:
            return x ** q.numerator
        if not x:
            raise EvalSingular("fractional power of zero")
        return x ** gmpy2.mpq(q.numerator, q.denominator)

    def sqrt_real(self, x):
        return gmpy2.sqrt(gmpy2.mpfr(x.real if hasattr(x, "real") else x))


class NativeBackend(Backend):
    """IEEE double precision; arrays are ``complex128``."""

    name = "native"
    dtype = np.complex128
    precision = 53

    def coerce(self, x):
        return complex(x)

    def zeros(self, m):
        return np.zeros(m, dtype=np.complex128)

    def asarray(self, values):
        return np.array([complex(v) for v in values], dtype=np.complex128)

    def log(self, x):
        if x == 0:
            raise EvalSingular("log of zero")
        return cmath.log(x)

    def pow_rational(self, x, q):
        q = Fraction(q)
        if q.denominator == 1:
            return complex(x) ** q.numerator
        if x == 0:
            raise EvalSingular("fractional power of zero")
        return cmath.exp(cmath.log(complex(x)) * (q.numerator / q.denominator))

    def sqrt_real(self, x):
        return math.sqrt(complex(x).real)


_cache = {}


def get_backend(kind="float", precision=None):
    """Return the backend for ``kind`` in {'float', 'exact'}.

    ``precision`` defaults to ``$CRWEYL_PRECISION`` or 128 bits.  A float
    request at 53 bits or below yields the native double backend.
    """
    if isinstance(kind, Backend):
        return kind
    if kind == "exact":
        key = ("exact",)
    else:
        if kind not in ("float", "mp", "native"):
            raise BackendError(f"unknown backend {kind!r}")
        if precision is None:
            precision = int(os.environ.get("CRWEYL_PRECISION", DEFAULT_PRECISION))
        precision = int(precision)
        if precision < 2:
            raise BackendError("precision must be at least 2 bits")
        key = ("native",) if (kind == "native" or precision <= 53) else ("mp", precision)
    b = _cache.get(key)
    if b is None:
        if key[0] == "exact":
            b = ExactBackend()
        elif key[0] == "native":
            b = NativeBackend()
        else:
            b = MPBackend(key[1])
        _cache[key] = b
    return b
