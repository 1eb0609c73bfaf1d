"""Truncated multivariate Taylor series ("jets") at a point.

A jet of order K in V variables stores the Taylor coefficients
``c_e = (1/e!) d^e f`` for all exponent vectors ``|e| <= K``.  Monomials are
listed by total degree first, so the jet of order ``k < K`` is a prefix of
the order-K coefficient vector and truncation is slicing.

For fields on C^N the variables are ``(z_1..z_N, zbar_1..zbar_N)``, treated
as independent (Wirtinger calculus).  Conjugating a field swaps the two
halves of every exponent vector and conjugates the coefficients.

:func:`field_jet` pushes a :class:`~crweyl.field.ScalarField` DAG through
this arithmetic, so high-order mixed partials of composite fields such as
``J(rho)^(-1/(n+2)) * rho`` cost a handful of series products per node
instead of a symbolic expansion.
"""
import math
from fractions import Fraction
from itertools import product as cartesian

import numpy as np

from . import _kernels
from .errors import EvalSingular
from .field import _children, positive_real

DEFAULT_JET_CAP = 8


def _compositions(total, nvar):
    """All exponent tuples of length ``nvar`` summing to ``total``."""
    if nvar == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, nvar - 1):
            yield (first,) + rest


class JetSpace:
    """Monomial bookkeeping shared by all jets in ``nvar`` variables up to ``maxorder``."""

    _cache = {}

    def __init__(self, nvar, maxorder):
        self.nvar = nvar
        self.maxorder = maxorder
        monos = []
        self.offsets = []
        for d in range(maxorder + 1):
            monos.extend(_compositions(d, nvar))
            self.offsets.append(len(monos))
        self.monos = monos
        self.index = {e: i for i, e in enumerate(monos)}
        self.degree = np.array([sum(e) for e in monos], dtype=np.int64)
        self._pairs = None
        self._diff = {}
        self._perm = None

    @classmethod
    def get(cls, nvar, maxorder):
        key = (nvar, maxorder)
        sp = cls._cache.get(key)
        if sp is None:
            sp = cls._cache[key] = JetSpace(nvar, maxorder)
        return sp

    def size(self, order):
        return self.offsets[order]

    def pairs(self):
        """Product table sorted by target, plus per-order prefix lengths."""
        if self._pairs is None:
            ia, ib, it = [], [], []
            K = self.maxorder
            for i, e in enumerate(self.monos):
                d = sum(e)
                for j in range(self.offsets[K - d]):
                    f = self.monos[j]
                    ia.append(i)
                    ib.append(j)
                    it.append(self.index[tuple(a + b for a, b in zip(e, f))])
            it = np.array(it, dtype=np.int64)
            order = np.argsort(it, kind="stable")
            ia = np.array(ia, dtype=np.int64)[order]
            ib = np.array(ib, dtype=np.int64)[order]
            it = it[order]
            npairs = [int(np.searchsorted(it, self.offsets[k])) for k in range(K + 1)]
            starts = np.searchsorted(it, np.arange(len(self.monos))).astype(np.int64)
            self._pairs = (ia, ib, it, starts, npairs)
        return self._pairs

    def diff_table(self, v):
        """For each target monomial, the source index and factor of d/dx_v."""
        tab = self._diff.get(v)
        if tab is None:
            src, fac = [], []
            for e in self.monos[: self.offsets[self.maxorder - 1]] if self.maxorder else []:
                up = list(e)
                up[v] += 1
                src.append(self.index[tuple(up)])
                fac.append(up[v])
            tab = (np.array(src, dtype=np.int64), np.array(fac, dtype=np.float64),
                   np.array(fac, dtype=object))
            self._diff[v] = tab
        return tab

    def conj_perm(self):
        if self._perm is None:
            h = self.nvar // 2
            self._perm = np.array([self.index[e[h:] + e[:h]] for e in self.monos], dtype=np.int64)
        return self._perm


class Jet:
    """Truncated Taylor series with coefficients in a backend's scalar type."""

    __slots__ = ("space", "backend", "order", "c")

    def __init__(self, space, backend, order, c):
        self.space = space
        self.backend = backend
        self.order = order
        self.c = c

    # constructors ----------------------------------------------------------
    @classmethod
    def constant(cls, space, backend, order, value):
        c = backend.zeros(space.size(order))
        c[0] = backend.coerce(value)
        return cls(space, backend, order, c)

    def _new(self, order, c):
        return Jet(self.space, self.backend, order, c)

    def _scalar(self, x):
        if type(x) is int:
            return x
        return self.backend.coerce(x)

    # basics ------------------------------------------------------------------
    @property
    def value(self):
        return self.c[0]

    def truncate(self, order):
        if order >= self.order:
            return self
        if order < 0:
            raise ValueError("jet order exhausted")
        return self._new(order, self.c[: self.space.size(order)])

    def copy(self):
        return self._new(self.order, self.c.copy())

    def coefficient(self, exps):
        """Taylor coefficient of the monomial with exponent tuple ``exps``."""
        return self.c[self.space.index[tuple(exps)]]

    def derivative(self, exps):
        """Partial derivative value ``d^e f`` at the base point."""
        return self.coefficient(exps) * math.prod(math.factorial(k) for k in exps)

    # arithmetic ------------------------------------------------------------
    def __add__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        if isinstance(o, Jet):
            k = min(self.order, o.order)
            m = self.space.size(k)
            return self._new(k, self.c[:m] + o.c[:m])
        c = self.c.copy()
        c[0] = c[0] + self._scalar(o)
        return self._new(self.order, c)

    __radd__ = __add__

    def __neg__(self):
        return self._new(self.order, -self.c)

    def __sub__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        if isinstance(o, Jet):
            k = min(self.order, o.order)
            m = self.space.size(k)
            return self._new(k, self.c[:m] - o.c[:m])
        c = self.c.copy()
        c[0] = c[0] - self._scalar(o)
        return self._new(self.order, c)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        if isinstance(o, Jet):
            k = min(self.order, o.order)
            m = self.space.size(k)
            ia, ib, it, starts, npairs = self.space.pairs()
            a = self.c[:m]
            b = a if o is self else o.c[:m]
            return self._new(k, _kernels.truncated_product(a, b, ia, ib, it, starts, npairs[k], m))
        return self._new(self.order, self.c * self._scalar(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Jet):
            return self * o.recip()
        return self * (self.backend.coerce(1) / self._scalar(o))

    def __rtruediv__(self, o):
        return self.recip() * o

    def __pow__(self, k):
        if isinstance(k, int):
            if k < 0:
                return self.recip() ** (-k)
            out = Jet.constant(self.space, self.backend, self.order, 1)
            base = self
            while k:
                if k & 1:
                    out = out * base
                k >>= 1
                if k:
                    base = base * base
            return out
        return self.powr(k)

    def conj(self):
        m = self.space.size(self.order)
        return self._new(self.order, np.conjugate(self.c[self.space.conj_perm()[:m]]))

    def diff(self, v):
        """Derivative in jet variable ``v``; the order drops by one."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, ffac, ofac = self.space.diff_table(v)
        m = self.space.size(self.order - 1)
        fac = ffac if self.c.dtype == np.complex128 else ofac
        return self._new(self.order - 1, self.c[src[:m]] * fac[:m])

    # series composition ----------------------------------------------------
    def _split(self):
        """``(a0, t)`` with ``self = a0 * (1 + t)`` and ``t(0) = 0``."""
        a0 = self.c[0]
        if self.backend.exact:
            if not a0:
                raise EvalSingular("series composition at a zero value")
        elif abs(complex(a0)) == 0.0:
            raise EvalSingular("series composition at a zero value")
        t = self * (self.backend.coerce(1) / a0)
        t.c[0] = self.backend.coerce(0)
        return a0, t

    def _horner(self, t, coeffs):
        """``sum_k coeffs[k] t^k`` for nilpotent ``t``."""
        s = Jet.constant(self.space, self.backend, t.order, coeffs[-1])
        for ck in reversed(coeffs[:-1]):
            s = t * s
            s.c[0] = s.c[0] + ck
        return s

    def recip(self):
        a0, t = self._split()
        one = self.backend.coerce(1)
        coeffs = [one if k % 2 == 0 else -one for k in range(self.order + 1)]
        return self._horner(t, coeffs) * (one / a0)

    def log(self):
        a0, t = self._split()
        b = self.backend
        coeffs = [b.coerce(0)] + [b.coerce(Fraction((-1) ** (k + 1), k)) for k in range(1, self.order + 1)]
        out = self._horner(t, coeffs) if self.order else Jet.constant(self.space, b, 0, 0)
        out.c[0] = out.c[0] + b.log(a0)
        return out

    def powr(self, q):
        """``self ** q`` for rational ``q``; the base value must be a positive real."""
        q = Fraction(q)
        if q.denominator == 1:
            return self ** q.numerator
        a0, t = self._split()
        b = self.backend
        coeffs = []
        binom = Fraction(1)
        for k in range(self.order + 1):
            coeffs.append(b.coerce(binom))
            binom = binom * (q - k) / (k + 1)
        return self._horner(t, coeffs) * b.pow_rational(a0, q)

    def __repr__(self):
        return f"Jet(order={self.order}, value={self.c[0]})"


# ---------------------------------------------------------------------------
# fields -> jets


class JetEvaluator:
    """Evaluate field DAGs to jets at one point, caching per node.

    Parameters
    ----------
    point : sequence
        N complex coordinates (backend scalars or anything coercible).
    order : int
        Jet order for the root requests; sub-expressions are evaluated at
        the same order.
    backend : Backend
    """

    def __init__(self, point, order, backend):
        backend.activate()
        self.backend = backend
        self.point = tuple(backend.coerce(p) for p in point)
        self.nvars = len(self.point)
        self.order = order
        self.space = JetSpace.get(2 * self.nvars, max(order, 0))
        self._memo = {}
        vals = list(self.point) + [p.conjugate() for p in self.point]
        self._vals = vals

    def jet(self, f):
        if f.nvars != self.nvars:
            raise ValueError("field and point dimensions differ")
        stack = [(f, False)]
        memo = self._memo
        while stack:
            g, ready = stack.pop()
            if g in memo:
                continue
            kids = _children(g)
            if not ready and any(k not in memo for k in kids):
                stack.append((g, True))
                stack.extend((k, False) for k in kids if k not in memo)
                continue
            memo[g] = self._node(g)
        return memo[f]

    def _node(self, g):
        op = g.op
        b = self.backend
        memo = self._memo
        if op in ("const", "coord", "poly"):
            return self.poly_jet(g.as_poly())
        kids = [memo[k] for k in _children(g)]
        if op == "add":
            out = kids[0]
            for k in kids[1:]:
                out = out + k
            return out
        if op == "mul":
            out = kids[0]
            for k in kids[1:]:
                out = out * k
            return out
        if op == "neg":
            return -kids[0]
        if op == "conj":
            return kids[0].conj()
        if op == "div":
            try:
                return kids[0] / kids[1]
            except EvalSingular as exc:
                raise EvalSingular(str(exc), node=g) from None
        if op == "powint":
            try:
                return kids[0] ** g.args[1]
            except EvalSingular as exc:
                raise EvalSingular(str(exc), node=g) from None
        if op == "powrat":
            positive_real(kids[0].value, b, g, "powrat base")
            return kids[0].powr(g.args[1])
        if op == "log":
            positive_real(kids[0].value, b, g, "log argument")
            return kids[0].log()
        raise AssertionError(op)

    def poly_jet(self, p):
        """Taylor expansion of a polynomial by binomial re-centering."""
        b = self.backend
        K = self.order
        sp = self.space
        V = sp.nvar
        vals = self._vals
        acc = {}
        for mi, coef in p.terms.items():
            a = mi.flat()
            c0 = b.coerce(coef)
            ranges = [range(min(ai, K) + 1) for ai in a]
            for e in cartesian(*ranges):
                if sum(e) > K:
                    continue
                v = c0
                for vi in range(V):
                    ai, ei = a[vi], e[vi]
                    if ai:
                        if ei:
                            v = v * math.comb(ai, ei)
                        if ai > ei:
                            v = v * vals[vi] ** (ai - ei)
                idx = sp.index[e]
                acc[idx] = acc[idx] + v if idx in acc else v
        c = b.zeros(sp.size(K))
        for idx, v in acc.items():
            c[idx] = v
        return Jet(sp, b, K, c)


def field_jet(f, point, order, backend=None):
    """Order-``order`` jet of field ``f`` at ``point``."""
    from .backend import get_backend
    backend = get_backend() if backend is None else backend
    return JetEvaluator(point, order, backend).jet(f)


__all__ = ["Jet", "JetSpace", "JetEvaluator", "field_jet", "DEFAULT_JET_CAP"]
