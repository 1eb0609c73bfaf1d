"""Dense tensors over the frame {Z_alpha} with typed index slots.

Each slot has an :class:`IndexKind`: lower or upper, barred or unbarred, or
the characteristic (T) slot of dimension one.  Entries are backend scalars
("value tensors") or jets ("field tensors"); field tensors can be
differentiated further (see :mod:`crweyl.pseudohermitian`), value tensors
cannot.

Index gymnastics use the Levi matrix of the producing context::

    T^{bbar} = h^{bbar a} T_a          (lower unbarred -> upper barred)
    T^{b}    = h^{b abar} T_abar       (lower barred   -> upper unbarred)

so raising flips variance *and* bar, which is what makes contractions of an
upper and a lower slot of equal bar well defined.
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .backend import magnitude
from .errors import FrameMismatch, KindMismatch, SymmetryViolation
from .jet import Jet


@dataclass(frozen=True)
class IndexKind:
    upper: bool = False
    barred: bool = False
    char: bool = False

    def raised(self):
        return IndexKind(True, not self.barred, self.char)

    def lowered(self):
        return IndexKind(False, not self.barred, self.char)

    def conj(self):
        return self if self.char else IndexKind(self.upper, not self.barred)

    def label(self):
        if self.char:
            return "0"
        return ("^" if self.upper else "_") + ("bar" if self.barred else "")


L = IndexKind(False, False)
LB = IndexKind(False, True)
U = IndexKind(True, False)
UB = IndexKind(True, True)
CHAR = IndexKind(False, False, True)

CURVATURE_KINDS = (L, LB, L, LB)


def _val(x):
    return x.value if isinstance(x, Jet) else x


def _conj(x):
    return x.conj() if isinstance(x, Jet) else x.conjugate()


class Tensor:
    """Typed dense tensor.

    Parameters
    ----------
    data : array_like
        Object array of scalars or jets, one axis per slot.
    kinds : sequence of IndexKind
    frame : object, optional
        Tag of the frame the components refer to; operations combining two
        tensors require equal tags.
    weight : int
        Power of ``e^u`` picked up under ``theta -> e^u theta``.
    """

    def __init__(self, data, kinds, frame=None, weight=0, flags=()):
        arr = np.empty(np.shape(data), dtype=object)
        arr[...] = data
        if arr.ndim != len(kinds):
            raise KindMismatch(f"{arr.ndim} axes but {len(kinds)} index kinds")
        self.data = arr
        self.kinds = tuple(kinds)
        self.frame = frame
        self.weight = weight
        self.flags = frozenset(flags)

    # basic protocol ---------------------------------------------------------
    @property
    def rank(self):
        return len(self.kinds)

    @property
    def shape(self):
        return self.data.shape

    def is_field(self):
        return any(isinstance(x, Jet) for x in self.data.flat)

    def values(self):
        """Point values of a field tensor (identity on value tensors)."""
        if not self.is_field():
            return self
        out = np.empty(self.shape, dtype=object)
        for idx, x in np.ndenumerate(self.data):
            out[idx] = _val(x)
        return Tensor(out, self.kinds, self.frame, self.weight, self.flags)

    def __getitem__(self, idx):
        return self.data[idx]

    def _like(self, data, kinds=None, weight=None):
        return Tensor(data, self.kinds if kinds is None else kinds, self.frame,
                      self.weight if weight is None else weight, self.flags)

    def _check(self, other):
        if self.kinds != other.kinds:
            raise KindMismatch("index kinds differ")
        if self.frame is not None and other.frame is not None and self.frame is not other.frame:
            raise FrameMismatch("tensors refer to different frames")

    def __add__(self, other):
        self._check(other)
        return self._like(self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return self._like(self.data - other.data)

    def __neg__(self):
        return self._like(-self.data)

    def scale(self, c):
        out = np.empty(self.shape, dtype=object)
        for idx, x in np.ndenumerate(self.data):
            out[idx] = x * c
        return self._like(out)

    def conj(self):
        out = np.empty(self.shape, dtype=object)
        for idx, x in np.ndenumerate(self.data):
            out[idx] = _conj(x)
        return self._like(out, tuple(k.conj() for k in self.kinds))

    def transpose(self, perm):
        return Tensor(np.transpose(self.data, perm), [self.kinds[p] for p in perm],
                      self.frame, self.weight, self.flags)

    def max_abs(self):
        vals = [magnitude(_val(x)) for x in self.data.flat]
        return max(vals, default=0.0)

    def max_diff(self, other):
        return (self.values() - other.values()).max_abs() if self.shape else magnitude(
            _val(self.data[()]) - _val(other.data[()]))

    def component_items(self):
        """Yield ``(index tuple, value)`` in C order."""
        for idx, x in np.ndenumerate(self.data):
            yield idx, _val(x)

    def key(self, name, idx):
        """Report key such as ``S_{1 1bar 2 2bar}`` (1-based)."""
        parts = []
        for k, i in zip(self.kinds, idx):
            if k.char:
                parts.append("0")
            else:
                parts.append(f"{i + 1}{'bar' if k.barred else ''}")
        lows = [p for p, k in zip(parts, self.kinds) if not k.upper]
        ups = [p for p, k in zip(parts, self.kinds) if k.upper]
        s = name
        if lows:
            s += "_{" + " ".join(lows) + "}"
        if ups:
            s += "^{" + " ".join(ups) + "}"
        return s

    def __repr__(self):
        return f"Tensor(kinds={[k.label() for k in self.kinds]}, shape={self.shape}, weight={self.weight})"


def _metric(ctx, field):
    if field:
        return ctx.h_jet, ctx.h_inv_jet
    return ctx.h, ctx.h_inv


def _apply_matrix(T, slot, mat):
    """``out[..., i, ...] = sum_j mat[i][j] T[..., j, ...]``."""
    data = T.data
    n = data.shape[slot]
    moved = np.moveaxis(data, slot, 0)
    out = np.empty_like(moved)
    for i in range(n):
        acc = None
        for j in range(n):
            m = mat[i][j]
            if not isinstance(m, Jet) and magnitude(m) == 0:
                continue
            term = moved[j] * m
            acc = term if acc is None else acc + term
        if acc is None:
            acc = moved[0] * 0
        out[i] = acc
    return np.moveaxis(out, 0, slot)


def _frame_check(T, ctx):
    tag = getattr(ctx, "frame_tag", None)
    if T.frame is not None and tag is not None and T.frame is not tag:
        raise FrameMismatch("tensor was produced in a different frame")


def raise_index(T, slot, ctx):
    """Raise one lower Greek slot with the inverse Levi matrix."""
    k = T.kinds[slot]
    if k.upper or k.char:
        raise KindMismatch(f"slot {slot} is not a lower Greek slot")
    _frame_check(T, ctx)
    h, hinv = _metric(ctx, T.is_field())
    n = len(h)
    if k.barred:
        # T^b = sum_a h^{b abar} T_abar = sum_a hinv[a][b] T_a
        mat = [[hinv[a][b] for a in range(n)] for b in range(n)]
    else:
        # T^{bbar} = sum_a h^{bbar a} T_a = sum_a hinv[b][a] T_a
        mat = hinv
    kinds = list(T.kinds)
    kinds[slot] = k.raised()
    return Tensor(_apply_matrix(T, slot, mat), kinds, T.frame, T.weight - 1, T.flags)


def lower_index(T, slot, ctx):
    """Lower one upper Greek slot with the Levi matrix."""
    k = T.kinds[slot]
    if not k.upper or k.char:
        raise KindMismatch(f"slot {slot} is not an upper Greek slot")
    _frame_check(T, ctx)
    h, hinv = _metric(ctx, T.is_field())
    n = len(h)
    if k.barred:
        # T_a = sum_b h_{a bbar} T^{bbar}
        mat = h
    else:
        # T_bbar = sum_a h_{a bbar} T^a = sum_a h[a][b] T^a
        mat = [[h[a][b] for a in range(n)] for b in range(n)]
    kinds = list(T.kinds)
    kinds[slot] = k.lowered()
    return Tensor(_apply_matrix(T, slot, mat), kinds, T.frame, T.weight + 1, T.flags)


def raise_all(T, ctx):
    for s, k in enumerate(T.kinds):
        if not k.upper and not k.char:
            T = raise_index(T, s, ctx)
    return T


def lower_all(T, ctx):
    for s, k in enumerate(T.kinds):
        if k.upper and not k.char:
            T = lower_index(T, s, ctx)
    return T


def contract(T, a, b):
    """Trace over slots ``a`` and ``b`` (one upper, one lower, same bar)."""
    ka, kb = T.kinds[a], T.kinds[b]
    if ka.upper == kb.upper or ka.barred != kb.barred or ka.char != kb.char:
        raise KindMismatch(f"cannot contract {ka.label()} with {kb.label()}")
    moved = np.moveaxis(T.data, (a, b), (0, 1))
    acc = moved[0, 0]
    for i in range(1, moved.shape[0]):
        acc = acc + moved[i, i]
    out = np.empty(moved.shape[2:], dtype=object)
    out[...] = acc
    kinds = [k for s, k in enumerate(T.kinds) if s not in (a, b)]
    return Tensor(out, kinds, T.frame, T.weight, T.flags)


def outer(A, B):
    """Tensor product, slots of ``A`` first."""
    data = np.multiply.outer(A.data, B.data)
    return Tensor(data, A.kinds + B.kinds, A.frame or B.frame, A.weight + B.weight)


def full_contraction(A, B):
    """``sum A[idx] * B[idx]`` for tensors of dual kinds."""
    if len(A.kinds) != len(B.kinds):
        raise KindMismatch("rank mismatch")
    for ka, kb in zip(A.kinds, B.kinds):
        if ka.upper == kb.upper or ka.barred != kb.barred:
            raise KindMismatch("full contraction needs dual kinds slot by slot")
    acc = None
    for x, y in zip(A.data.flat, B.data.flat):
        t = x * y
        acc = t if acc is None else acc + t
    return acc


def norm2(T, ctx):
    """Hermitian norm ``|T|^2`` = conj(T raised) contracted with T."""
    up = raise_all(T, ctx).conj()
    return full_contraction(up, T)


def cmw_norm(S, ctx):
    """``|S|^2 = S^{b abar r sbar} S_{b abar r sbar}``."""
    return norm2(S, ctx)


def metric_tensor(ctx, field=False):
    h, _ = _metric(ctx, field)
    return Tensor(np.array(h, dtype=object), (L, LB), getattr(ctx, "frame_tag", None), 1)


def curvature_symmetry_residual(R):
    """Max deviation from R_{a b c d} = R_{c b a d} = R_{c d a b} (value tensors)."""
    d = R.values().data
    s1 = np.transpose(d, (2, 1, 0, 3))
    s2 = np.transpose(d, (2, 3, 0, 1))
    res = 0.0
    for x, y, z in zip(d.flat, s1.flat, s2.flat):
        res = max(res, magnitude(x - y), magnitude(x - z))
    return res


def webster_tracefree(R, Ric, Rscal, h, n):
    """The tracefree projection on raw arrays (jets or scalars)."""
    S = np.empty((n, n, n, n), dtype=object)
    c1 = Fraction(1, n + 2)
    c2 = Fraction(1, (n + 1) * (n + 2))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    ric = (Ric[a][b] * h[c][d] + Ric[c][b] * h[a][d]
                           + Ric[a][d] * h[c][b] + Ric[c][d] * h[a][b])
                    hh = h[a][b] * h[c][d] + h[a][d] * h[c][b]
                    S[a, b, c, d] = R[a][b][c][d] - ric * _coerce_like(ric, c1) + hh * (Rscal * _coerce_like(hh, c2))
    return S


def _coerce_like(x, q):
    """Make a rational constant usable against ``x``'s scalar type."""
    if isinstance(x, Jet):
        return x.backend.coerce(q)
    from .backend import QQi
    if type(x) is QQi:
        return QQi.coerce(q)
    if isinstance(x, complex):
        return float(q)
    import gmpy2
    return gmpy2.mpq(q.numerator, q.denominator)


def tracefree_part(R, Ric, Rscal, ctx, check=True):
    """Webster's tracefree projection of a curvature-type tensor.

    ``S = R - (Ric (x) h terms)/(n+2) + Rscal (h (x) h terms)/((n+1)(n+2))``.
    For ``n = 1`` the result is the zero tensor flagged ``cr_dimension_one``.
    """
    if R.kinds != CURVATURE_KINDS or Ric.kinds != (L, LB):
        raise KindMismatch("tracefree_part expects R_{a bbar c dbar} and Ric_{a bbar}")
    _frame_check(R, ctx)
    n = R.shape[0]
    if n == 1:
        zero = np.empty((1, 1, 1, 1), dtype=object)
        zero[0, 0, 0, 0] = R.data[0, 0, 0, 0] * 0
        return Tensor(zero, CURVATURE_KINDS, R.frame, R.weight, {"cr_dimension_one"})
    if check and not R.is_field():
        scale = max(1.0, R.max_abs())
        if curvature_symmetry_residual(R) > 1e-8 * scale:
            raise SymmetryViolation("input lacks the curvature symmetries")
    field = R.is_field() or Ric.is_field()
    h, _ = _metric(ctx, field)
    rs = Rscal.data[()] if isinstance(Rscal, Tensor) else Rscal
    S = webster_tracefree(R.data, Ric.data, rs, h, n)
    return Tensor(S, CURVATURE_KINDS, R.frame, R.weight)


def trace_residual(S, ctx):
    """Max |h^{a bbar} S_{a bbar c dbar}| over all four trace positions."""
    Sv = S.values().data
    hinv = ctx.h_inv
    n = Sv.shape[0]
    res = 0.0
    for x in range(n):
        for y in range(n):
            t1 = sum(hinv[b][a] * Sv[a, b, x, y] for a in range(n) for b in range(n))
            t2 = sum(hinv[b][a] * Sv[x, y, a, b] for a in range(n) for b in range(n))
            t3 = sum(hinv[b][a] * Sv[a, y, x, b] for a in range(n) for b in range(n))
            t4 = sum(hinv[b][a] * Sv[x, b, a, y] for a in range(n) for b in range(n))
            res = max(res, *(magnitude(t) for t in (t1, t2, t3, t4)))
    return res


def _mixed(S, ctx):
    """``S_{a1}^{a2}_{m1}^{m2}``: slots 1 and 3 of S raised."""
    return raise_index(raise_index(S, 1, ctx), 3, ctx)


def cmw_power(S, k, ctx):
    """The chain ``S[k]``: k-fold composition of S as an endomorphism of pairs."""
    if k < 1:
        raise ValueError("k must be at least 1")
    T = _mixed(S, ctx)
    cur = T.data
    n = cur.shape[0]
    for _ in range(k - 1):
        nxt = np.empty_like(cur)
        for a1 in range(n):
            for a3 in range(n):
                for m1 in range(n):
                    for m3 in range(n):
                        acc = None
                        for a2 in range(n):
                            for m2 in range(n):
                                t = cur[a1, a2, m1, m2] * T.data[a2, a3, m2, m3]
                                acc = t if acc is None else acc + t
                        nxt[a1, a3, m1, m3] = acc
        cur = nxt
    return Tensor(cur, T.kinds, S.frame, k * S.weight - 2 * k)


def cmw_power_scalar(S, m, ctx):
    """``S^m``: close the chain of length ``m`` by a double trace."""
    Sk = cmw_power(S, m - 1, ctx).data if m > 1 else None
    T = _mixed(S, ctx).data
    n = T.shape[0]
    acc = None
    base = T if Sk is None else Sk
    for a1 in range(n):
        for a2 in range(n):
            for m1 in range(n):
                for m2 in range(n):
                    if Sk is None:
                        if a1 != a2 or m1 != m2:
                            continue
                        t = base[a1, a2, m1, m2]
                    else:
                        t = base[a1, a2, m1, m2] * T[a2, a1, m2, m1]
                    acc = t if acc is None else acc + t
    return acc
