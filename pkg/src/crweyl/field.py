"""Hash-consed expression DAG for scalar fields on C^N.

Leaves are constants, coordinates and polynomials; interior nodes are
``add``, ``mul``, ``div``, ``neg``, ``conj``, ``powint``, ``powrat`` and
``log``.  Construction goes through the module-level smart constructors,
which fold polynomial children together, absorb 0 and 1, flatten nested
sums and products, and return the unique node for each structure.  Because
nodes are unique, ``is`` is structural equality and derivative caches are
shared by every expression that contains a given sub-expression.

Nodes are immutable.  The intern table is guarded by a lock; the per-node
caches are plain dicts whose single-key operations are atomic under the GIL.
"""
import itertools
import threading
import weakref
from fractions import Fraction

from .backend import QQi, magnitude
from .errors import EvalSingular
from .polynomial import CPolynomial, poly_parse

_POLYLIKE = frozenset(("const", "coord", "poly"))
# polynomial powers are expanded eagerly only below this total degree
_EXPAND_DEGREE = 24
_EVAL_CACHE_SIZE = 16

_table = weakref.WeakValueDictionary()
_lock = threading.Lock()
_serial = itertools.count()


class ScalarField:
    """One node of the expression DAG.  Build with the functions below, not directly."""

    __slots__ = ("op", "args", "nvars", "serial", "_diff", "_evals", "_poly", "__weakref__")

    def __init__(self, op, args, nvars):
        self.op = op
        self.args = args
        self.nvars = nvars
        self.serial = next(_serial)
        self._diff = {}
        self._evals = {}
        self._poly = None

    # arithmetic sugar ------------------------------------------------------
    def __add__(self, o):
        return add(self, o)

    def __radd__(self, o):
        return add(o, self)

    def __sub__(self, o):
        return add(self, neg(lift(o, self.nvars)))

    def __rsub__(self, o):
        return add(o, neg(self))

    def __mul__(self, o):
        return mul(self, o)

    def __rmul__(self, o):
        return mul(o, self)

    def __truediv__(self, o):
        return div(self, o)

    def __rtruediv__(self, o):
        return div(lift(o, self.nvars), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        if isinstance(k, int):
            return powint(self, k)
        return powrat(self, k)

    def conj(self):
        return conj(self)

    def diff(self, j, barred=False):
        return field_diff(self, j, barred)

    # structure -------------------------------------------------------------
    def is_polynomial(self):
        return self.op in _POLYLIKE

    def as_poly(self):
        """The node as a :class:`CPolynomial` (polynomial-like nodes only)."""
        if self._poly is None:
            if self.op == "poly":
                self._poly = self.args[0]
            elif self.op == "const":
                self._poly = CPolynomial.constant(self.args[0], self.nvars)
            elif self.op == "coord":
                self._poly = CPolynomial.coordinate(self.args[0], self.nvars, self.args[1])
            else:
                raise TypeError(f"{self.op} node is not a polynomial")
        return self._poly

    def size(self):
        """Number of distinct nodes reachable from this one."""
        seen = set()
        stack = [self]
        while stack:
            f = stack.pop()
            if id(f) in seen:
                continue
            seen.add(id(f))
            stack.extend(_children(f))
        return len(seen)

    def __repr__(self):
        if self.op == "const":
            return f"<const {self.args[0]}>"
        if self.op == "coord":
            j, b = self.args
            return f"<{'conj(z%d)' % (j + 1) if b else 'z%d' % (j + 1)}>"
        if self.op == "poly":
            from .polynomial import poly_print
            return f"<poly {poly_print(self.args[0])}>"
        return f"<{self.op} #{self.serial}>"


def _children(f):
    if f.op in ("add", "mul"):
        return f.args
    if f.op in ("div",):
        return f.args
    if f.op in ("neg", "conj", "log"):
        return f.args[:1]
    if f.op in ("powint", "powrat"):
        return f.args[:1]
    return ()


def _intern(op, args, nvars):
    key = (op, nvars, args)
    node = _table.get(key)
    if node is not None:
        return node
    with _lock:
        node = _table.get(key)
        if node is None:
            node = ScalarField(op, args, nvars)
            _table[key] = node
    return node


# ---------------------------------------------------------------------------
# smart constructors


def constant(c, nvars):
    return _intern("const", (QQi.coerce(c),), nvars)


def coordinate(j, nvars, barred=False):
    """Coordinate ``z_{j+1}`` (0-based ``j``) or its conjugate."""
    return _intern("coord", (int(j), bool(barred)), nvars)


def polynomial(p):
    c = p.constant_value()
    if c is not None:
        return constant(c, p.nvars)
    jb = p.as_coordinate()
    if jb is not None:
        return coordinate(jb[0], p.nvars, jb[1])
    return _intern("poly", (p,), p.nvars)


def from_text(text, nvars):
    """Parse grammar text straight into a field."""
    return polynomial(poly_parse(text, nvars))


def lift(x, nvars):
    if isinstance(x, ScalarField):
        return x
    if isinstance(x, CPolynomial):
        return polynomial(x)
    return constant(x, nvars)


def _nv(fs):
    for f in fs:
        if isinstance(f, ScalarField):
            return f.nvars
    raise TypeError("at least one operand must be a ScalarField")


def _sorted(children):
    return tuple(sorted(children, key=lambda f: f.serial))


def add(*fs):
    nvars = _nv(fs)
    acc = CPolynomial({}, nvars)
    rest = []
    for f in fs:
        f = lift(f, nvars)
        if f.op == "add":
            for g in f.args:
                if g.op in _POLYLIKE:
                    acc = acc + g.as_poly()
                else:
                    rest.append(g)
        elif f.op in _POLYLIKE:
            acc = acc + f.as_poly()
        else:
            rest.append(f)
    if not acc.is_zero():
        rest.append(polynomial(acc))
    if not rest:
        return constant(0, nvars)
    if len(rest) == 1:
        return rest[0]
    return _intern("add", _sorted(rest), nvars)


def mul(*fs):
    nvars = _nv(fs)
    acc = CPolynomial.constant(1, nvars)
    rest = []
    stack = [lift(f, nvars) for f in fs]
    while stack:
        f = stack.pop()
        if f.op == "mul":
            stack.extend(f.args)
        elif f.op == "neg":
            acc = -acc
            stack.append(f.args[0])
        elif f.op in _POLYLIKE:
            acc = acc * f.as_poly()
        else:
            rest.append(f)
    if acc.is_zero():
        return constant(0, nvars)
    c = acc.constant_value()
    if c is None or c != 1:
        rest.append(polynomial(acc))
    if not rest:
        return constant(1, nvars)
    if len(rest) == 1:
        return rest[0]
    return _intern("mul", _sorted(rest), nvars)


def neg(f):
    f = lift(f, _nv((f,)))
    if f.op in _POLYLIKE:
        return polynomial(-f.as_poly())
    if f.op == "neg":
        return f.args[0]
    if f.op == "mul":
        return mul(constant(-1, f.nvars), f)
    return _intern("neg", (f,), f.nvars)


def conj(f):
    f = lift(f, _nv((f,)))
    if f.op in _POLYLIKE:
        return polynomial(f.as_poly().conj())
    if f.op == "conj":
        return f.args[0]
    if field_is_real(f) is True:
        return f
    return _intern("conj", (f,), f.nvars)


def div(f, g):
    nvars = _nv((f, g))
    f, g = lift(f, nvars), lift(g, nvars)
    if g.op == "const":
        if not g.args[0]:
            raise EvalSingular("division by the zero constant", node=g)
        return mul(f, constant(QQi(1) / g.args[0], nvars))
    if f.op == "const" and not f.args[0]:
        return f
    if f is g:
        return constant(1, nvars)
    return _intern("div", (f, g), nvars)


def powint(f, k):
    f = lift(f, _nv((f,)))
    k = int(k)
    if k == 0:
        return constant(1, f.nvars)
    if k == 1:
        return f
    if f.op == "const":
        if k < 0 and not f.args[0]:
            raise EvalSingular("negative power of zero", node=f)
        return constant(f.args[0] ** k, f.nvars)
    if f.op in _POLYLIKE and k > 0 and f.as_poly().degree() * k <= _EXPAND_DEGREE:
        return polynomial(f.as_poly() ** k)
    if f.op == "powint":
        return powint(f.args[0], f.args[1] * k)
    return _intern("powint", (f, k), f.nvars)


def powrat(f, q):
    f = lift(f, _nv((f,)))
    q = Fraction(q)
    if q.denominator == 1:
        return powint(f, q.numerator)
    if f.op == "const" and f.args[0] == 1:
        return f
    return _intern("powrat", (f, q), f.nvars)


def log(f):
    f = lift(f, _nv((f,)))
    if f.op == "const" and f.args[0] == 1:
        return constant(0, f.nvars)
    return _intern("log", (f,), f.nvars)


# ---------------------------------------------------------------------------
# differentiation


def field_diff(f, j, barred=False):
    """Exact partial derivative in ``z_{j+1}`` (0-based ``j``) or its conjugate."""
    key = (j, bool(barred))
    hit = f._diff.get(key)
    if hit is not None:
        return hit
    out = _diff(f, j, bool(barred))
    f._diff[key] = out
    return out


def _diff(f, j, barred):
    op = f.op
    nv = f.nvars
    if op in _POLYLIKE:
        return polynomial(f.as_poly().diff(j, barred))
    if op == "add":
        return add(*[field_diff(g, j, barred) for g in f.args])
    if op == "mul":
        terms = []
        for i, g in enumerate(f.args):
            dg = field_diff(g, j, barred)
            if dg.op == "const" and not dg.args[0]:
                continue
            terms.append(mul(dg, *(f.args[:i] + f.args[i + 1:])))
        return add(constant(0, nv), *terms)
    if op == "neg":
        return neg(field_diff(f.args[0], j, barred))
    if op == "conj":
        return conj(field_diff(f.args[0], j, not barred))
    if op == "div":
        num, den = f.args
        dn = field_diff(num, j, barred)
        dd = field_diff(den, j, barred)
        return add(div(dn, den), neg(div(mul(num, dd), powint(den, 2))))
    if op == "powint":
        g, k = f.args
        return mul(constant(k, nv), powint(g, k - 1), field_diff(g, j, barred))
    if op == "powrat":
        g, q = f.args
        return mul(constant(q, nv), powrat(g, q - 1), field_diff(g, j, barred))
    if op == "log":
        g = f.args[0]
        return div(field_diff(g, j, barred), g)
    raise AssertionError(op)


def field_diff_multi(f, mi):
    """Apply a :class:`~crweyl.polynomial.MultiIndex` worth of partials."""
    for j, e in enumerate(mi.hol):
        for _ in range(e):
            f = field_diff(f, j, False)
    for j, e in enumerate(mi.anti):
        for _ in range(e):
            f = field_diff(f, j, True)
    return f


# ---------------------------------------------------------------------------
# evaluation


def _point_key(point):
    return tuple((p.re, p.im) if type(p) is QQi else complex(p) if isinstance(p, complex)
                 else (str(p.real), str(p.imag)) for p in point)


def positive_real(x, backend, node=None, what="argument"):
    """Return the real part of ``x`` after checking it is a positive real."""
    if backend.exact:
        if x.im or x.re <= 0:
            raise EvalSingular(f"{what} must be a positive real, got {x}", node=node)
        return x
    re, im = x.real, x.imag
    if re <= 0 or abs(im) > 1e-9 * abs(re):
        raise EvalSingular(f"{what} must be a positive real, got {complex(x)}", node=node)
    return backend.coerce(re)


def _tiny(backend):
    return 0.0 if backend.exact else 2.0 ** (-backend.precision * 4)


def field_eval(f, point, backend=None):
    """Evaluate ``f`` at ``point`` (N complex numbers).

    Results are cached per ``(node, point, backend)``.  ``backend`` defaults
    to the float backend at the configured precision.
    """
    from .backend import get_backend
    backend = get_backend() if backend is None else backend
    backend.activate()
    pt = tuple(backend.coerce(p) for p in point)
    if len(pt) != f.nvars:
        raise ValueError(f"point has {len(pt)} coordinates, field expects {f.nvars}")
    pkey = (_point_key(pt), backend.key())
    return _eval(f, pt, pkey, backend)


def _eval(f, pt, pkey, backend):
    hit = f._evals.get(pkey)
    if hit is not None:
        return hit
    op = f.op
    if op == "const":
        val = backend.coerce(f.args[0])
    elif op == "coord":
        j, b = f.args
        val = pt[j].conjugate() if b else pt[j]
    elif op == "poly":
        val = f.args[0].eval(pt, backend)
    else:
        vals = [_eval(g, pt, pkey, backend) for g in _children(f)]
        if op == "add":
            val = vals[0]
            for v in vals[1:]:
                val = val + v
        elif op == "mul":
            val = vals[0]
            for v in vals[1:]:
                val = val * v
        elif op == "neg":
            val = -vals[0]
        elif op == "conj":
            val = vals[0].conjugate()
        elif op == "div":
            if magnitude(vals[1]) <= _tiny(backend):
                raise EvalSingular("division by zero", node=f)
            val = vals[0] / vals[1]
        elif op == "powint":
            k = f.args[1]
            if k < 0 and magnitude(vals[0]) <= _tiny(backend):
                raise EvalSingular("negative power of zero", node=f)
            val = vals[0] ** k
        elif op == "powrat":
            base = positive_real(vals[0], backend, f, "powrat base")
            val = backend.pow_rational(base, f.args[1])
        elif op == "log":
            base = positive_real(vals[0], backend, f, "log argument")
            val = backend.log(base)
        else:
            raise AssertionError(op)
    if len(f._evals) >= _EVAL_CACHE_SIZE:
        f._evals.clear()
    f._evals[pkey] = val
    return val


def field_is_real(f):
    """True, False, or None when the structure does not decide it."""
    op = f.op
    if op == "const":
        return not f.args[0].im
    if op in _POLYLIKE:
        return f.as_poly().is_real()
    if op == "conj":
        return field_is_real(f.args[0])
    kids = [field_is_real(g) for g in _children(f)]
    if all(k is True for k in kids):
        return True
    return None
