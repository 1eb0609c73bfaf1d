"""Tanaka-Webster geometry of ``(M, theta = i dbar rho)`` from the defining function.

Everything is assembled from jets of ``rho`` at one point, so each quantity
is itself a truncated Taylor series and can be differentiated along the
frame again.  With rho jets of order ``K``:

==========================  =========
quantity                    jet order
==========================  =========
h, xi, r, J                 K - 2
connection, torsion         K - 3
curvature, Ricci, S         K - 4
first derivatives of S      K - 5
==========================  =========

Index placement follows :mod:`crweyl.frame` (0-based Greek indices).  The
connection coefficients are stored as in ``omega_b^c = hol[b][c][m] theta^m
+ anti[b][c][m] theta^mbar + zero[b][c] theta``.

Sign conventions
----------------
The characteristic field is ``T = i(xi^j d_j - conj(xi^j) d_jbar)``; it is
checked against ``theta(T) = 1`` and ``T -| d theta = 0`` rather than
assumed.  The sub-Laplacian convention is selected by
:data:`crweyl.config.DELTA_B`.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .backend import magnitude, to_complex
from .config import DELTA_B, DELTA_B_CONVENTIONS
from .errors import (ComponentNotField, HessianDegenerate, NotApproxMongeAmpere,
                     NotStrictlyPSH, NotUnitHessian, RouteDisagreement)
from .field import lift
from .frame import LogDerivOracle, inverse
from .jet import Jet
from .tensor import CHAR, CURVATURE_KINDS, LB, L, Tensor, raise_index, webster_tracefree

ROUTE_TOL = 1e-9


def _sum(items):
    acc = None
    for x in items:
        acc = x if acc is None else acc + x
    return acc


def _obj(shape):
    return np.empty(shape, dtype=object)


def _objlist(items):
    out = _obj((len(items),))
    for i, x in enumerate(items):
        out[i] = x
    return out


def _val(x):
    return x.value if isinstance(x, Jet) else x


def _values(arr):
    out = _obj(np.shape(arr))
    for idx, x in np.ndenumerate(np.asarray(arr, dtype=object)):
        out[idx] = _val(x)
    return out


def _max_abs(arr):
    return max((magnitude(_val(x)) for x in np.asarray(arr, dtype=object).flat), default=0.0)


def _max_diff(a, b):
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    return max((magnitude(_val(x) - _val(y)) for x, y in zip(a.flat, b.flat)), default=0.0)


def _apply(data, slot, mat):
    """``out[.., i, ..] = sum_j mat[i][j] data[.., j, ..]`` along ``slot``."""
    moved = np.moveaxis(data, slot, 0)
    out = np.empty_like(moved)
    n = moved.shape[0]
    for i in range(n):
        out[i] = _sum(moved[j] * mat[i][j] for j in range(n))
    return np.moveaxis(out, 0, slot)


def require_order(ctx, order):
    """``ctx`` itself if its jets are deep enough, else a deeper copy."""
    return ctx if ctx.order >= order else ctx.at_order(order)


# ---------------------------------------------------------------------------
# domain records


@dataclass
class ConnectionCoeffs:
    """Point values of the Tanaka-Webster connection forms.

    ``gammaHol[b][c][m]``, ``gammaAnti[b][c][m]`` and ``gammaT[b][c]`` are the
    coefficients of ``theta^m``, ``theta^mbar`` and ``theta`` in
    ``omega_b^c``.
    """

    gammaHol: np.ndarray
    gammaAnti: np.ndarray
    gammaT: np.ndarray


@dataclass
class CurvaturePack:
    """Curvature data at a point (value tensors).

    ``II_hol`` is None when the complex Hessian of rho is singular.
    """

    R4: Tensor
    S4: Tensor
    Ric: Tensor
    Rscal: object
    A: Tensor
    II_hol: object
    Hnorm2: object


# ---------------------------------------------------------------------------
# the per-context geometry cache


class Geometry:
    """Lazily computed Tanaka-Webster data of one :class:`FrameContext`.

    Attributes hold nested arrays of jets; the public functions below turn
    them into value tensors.  Obtain instances through :func:`geometry`.
    """

    def __init__(self, ctx):
        if ctx.order < 3:
            raise ValueError("Tanaka-Webster data need rho jets of order >= 3")
        self.ctx = ctx
        self.n = ctx.n
        self.N = ctx.N
        self.b = ctx.backend
        self.I = ctx.backend.coerce(1j)
        self.tag = ctx.frame_tag

    # -- basic fields ----------------------------------------------------------
    @property
    def h(self):
        return self.ctx.h_jet

    @property
    def hinv(self):
        return self.ctx.h_inv_jet

    @property
    def hh(self):
        return self.ctx.hh_jet

    @cached_property
    def hhb(self):
        """``h_{bbar dbar}`` = conj(h_{bd})."""
        n = self.n
        return [[self.hh[a][c].conj() for c in range(n)] for a in range(n)]

    @cached_property
    def xi_greek(self):
        return [self.ctx.xi_jet[g] for g in self.ctx.greek]

    @cached_property
    def xi_low(self):
        """``xi_b = h_{b sbar} conj(xi^s)``."""
        n = self.n
        return [_sum(self.h[b][s] * self.xi_greek[s].conj() for s in range(n)) for b in range(n)]

    def zeros(self, order):
        return Jet.constant(self.ctx.rho_jet.space, self.b, order, 0)

    # -- frame vector fields ---------------------------------------------------
    def tvec(self, f):
        """Characteristic derivative ``T f``."""
        ctx, N = self.ctx, self.N
        hol = _sum(ctx.xi_jet[j] * f.diff(j) for j in range(N))
        anti = _sum(ctx.xib_jet[j] * f.diff(N + j) for j in range(N))
        return (hol - anti) * self.I

    def deriv(self, f, direction, mu=None):
        if direction == "hol":
            return self.ctx.zvec(f, mu)
        if direction == "anti":
            return self.ctx.zvec(f, mu, True)
        if direction == "T":
            return self.tvec(f)
        raise ValueError(f"unknown direction {direction!r}")

    # -- connection ------------------------------------------------------------
    @cached_property
    def conn(self):
        """``(hol, anti, zero)`` jets of the connection coefficients."""
        n, ctx = self.n, self.ctx
        dh = [[[ctx.zvec(self.h[b][s], m) for m in range(n)] for s in range(n)] for b in range(n)]
        hol = _obj((n, n, n))
        anti = _obj((n, n, n))
        zero = _obj((n, n))
        for b in range(n):
            for c in range(n):
                for m in range(n):
                    t = _sum(self.hinv[s][c] * dh[b][s][m] for s in range(n))
                    if m == c:
                        t = t - self.xi_low[b]
                    hol[b, c, m] = t
                    anti[b, c, m] = self.xi_greek[c] * self.h[b][m]
                zero[b, c] = -(ctx.zvec(self.xi_greek[c], b) * self.I)
        return hol, anti, zero

    @cached_property
    def conn_conj(self):
        hol, anti, zero = self.conn
        cj = np.vectorize(lambda x: x.conj(), otypes=[object])
        return cj(hol), cj(anti), cj(zero)

    def omega(self, barred, direction, mu):
        """``M[b][c] = omega_b^c(X)`` (or its conjugate form ``omega_bbar^cbar(X)``)."""
        hol, anti, zero = self.conn
        hol_c, anti_c, zero_c = self.conn_conj
        if direction == "T":
            return zero_c if barred else zero
        if direction == "hol":
            return anti_c[:, :, mu] if barred else hol[:, :, mu]
        return hol_c[:, :, mu] if barred else anti[:, :, mu]

    def slot_matrix(self, kind, direction, mu):
        """Matrix whose action along a slot gives the connection term to subtract."""
        M = self.omega(kind.barred, direction, mu)
        if kind.upper:
            return -(M.T)
        return M

    # -- covariant differentiation --------------------------------------------
    def covd_data(self, data, kinds, direction):
        """Append a derivative slot to a jet array with slot ``kinds``."""
        n = self.n
        mus = [None] if direction == "T" else list(range(n))
        data = np.asarray(data, dtype=object)
        out = _obj(data.shape + (len(mus),))
        for i, mu in enumerate(mus):
            comp = _obj(data.shape)
            for idx, x in np.ndenumerate(data):
                comp[idx] = self.deriv(x, direction, mu)
            for s, k in enumerate(kinds):
                if k.char:
                    continue
                comp = comp - _apply(data, s, self.slot_matrix(k, direction, mu))
            out[..., i] = comp
        return out

    def covd(self, T, direction):
        kind = {"hol": L, "anti": LB, "T": CHAR}[direction]
        data = self.covd_data(T.data, T.kinds, direction)
        return Tensor(data, T.kinds + (kind,), self.tag, T.weight, T.flags)

    def gradient(self, f):
        """``(f_{,a}, f_{,abar})`` of a scalar jet."""
        n = self.n
        return ([self.ctx.zvec(f, a) for a in range(n)],
                [self.ctx.zvec(f, a, True) for a in range(n)])

    def sublaplacian(self, f, convention=None):
        """``Delta_b f`` of a scalar jet."""
        convention = DELTA_B if convention is None else convention
        if convention not in DELTA_B_CONVENTIONS:
            raise ValueError(f"unknown sub-Laplacian convention {convention!r}")
        n = self.n
        d, db = self.gradient(f)
        # f_{,a bbar} and f_{,abar b}
        dd = self.covd_data(_objlist(d), (L,), "anti")
        ddb = self.covd_data(_objlist(db), (LB,), "hol")
        s = _sum(self.hinv[b][a] * dd[a, b] + self.hinv[a][b] * ddb[a, b]
                 for a in range(n) for b in range(n))
        return -s if convention == "negative-sum" else s

    # -- second-order data -----------------------------------------------------
    @cached_property
    def Dk(self):
        """``D_{ac}(rho_kbar)`` indexed ``[k][a][c]``."""
        ctx, n, N = self.ctx, self.n, self.N
        return [[[ctx.frame_deriv(ctx.rho_d, (N + k,), ((a, False), (c, False)))
                  for c in range(n)] for a in range(n)] for k in range(N)]

    @cached_property
    def Dbj(self):
        """``D_{bbar dbar}(rho_j)`` indexed ``[j][b][d]``."""
        n, N = self.n, self.N
        return [[[self.Dk[j][b][d].conj() for d in range(n)] for b in range(n)] for j in range(N)]

    @cached_property
    def xiDk(self):
        """``conj(xi^k) D_{ac}(rho_kbar)``."""
        n, N = self.n, self.N
        return [[_sum(self.ctx.xib_jet[k] * self.Dk[k][a][c] for k in range(N)) for c in range(n)]
                for a in range(n)]

    @cached_property
    def A(self):
        """Torsion from ``-i A_{ac} = conj(xi^k) D_{ac}(rho_kbar) - r h_{ac}``."""
        n, r = self.n, self.ctx.r_jet
        return np.array([[(self.xiDk[a][c] - r * self.hh[a][c]) * self.I for c in range(n)]
                         for a in range(n)], dtype=object)

    @cached_property
    def A_bracket(self):
        """Torsion read off ``tau Z_a = -[T, Z_a]^{(0,1)}``.

        Only first principles enter: ``[T, Z_a]`` is expanded in the frame
        ``{Z_b, Z_bbar, T}`` and ``A_{ac} = A_a^{bbar} h_{c bbar}``.
        """
        ctx, n, N, I = self.ctx, self.n, self.N, self.I
        out = _obj((n, n))
        for a in range(n):
            # (0,1) components of [T, Z_a]: i Z_a(conj xi^j)
            anti = [ctx.zvec(ctx.xib_jet[j], a) * I for j in range(N)]
            c = _sum(ctx.d1b[j] * anti[j] for j in range(N)) * I
            bcoef = [anti[g] + c * ctx.xib_jet[g] * I for g in ctx.greek]
            for cc in range(n):
                out[a, cc] = -_sum(bcoef[s] * self.h[cc][s] for s in range(n))
        return out

    @cached_property
    def Ginv(self):
        ctx = self.ctx
        d = ctx.detG.value
        scale = max(magnitude(_val(x)) for row in ctx.G for x in row)
        if magnitude(d) <= ctx.tol.matrix * max(scale, 1e-300) ** ctx.N:
            raise HessianDegenerate(
                "complex Hessian of rho is singular at the point; "
                "use frame.squared_wrapper(surface, C) (rho + C rho^2) instead")
        inv, _ = inverse(ctx.G)
        return inv

    @cached_property
    def rho_up(self):
        """``rho^{kbar} = rho^{kbar j} rho_j`` as jets."""
        N = self.N
        return [_sum(self.Ginv[k][j] * self.ctx.d1[j] for j in range(N)) for k in range(N)]

    @cached_property
    def II(self):
        """``rho^{kbar} D_{ac}(rho_kbar) - h_{ac}``: coefficient of xi in II(Z_a, Z_c)."""
        n, N = self.n, self.N
        return np.array([[_sum(self.rho_up[k] * self.Dk[k][a][c] for k in range(N)) - self.hh[a][c]
                          for c in range(n)] for a in range(n)], dtype=object)

    # -- fourth-order data -----------------------------------------------------
    @cached_property
    def curlyR(self):
        ctx, n = self.ctx, self.n
        out = _obj((n, n, n, n))
        for a, b, c, d in np.ndindex(n, n, n, n):
            if out[a, b, c, d] is not None:
                continue
            v = ctx.frame_deriv(ctx.rho_d, (), ((a, False), (b, True), (c, False), (d, True)))
            out[a, b, c, d] = out[c, b, a, d] = out[a, d, c, b] = out[c, d, a, b] = v
        return out

    @cached_property
    def quad(self):
        """``h^{j kbar} D_{ac}(rho_kbar) D_{bbar dbar}(rho_j)``."""
        n, N = self.n, self.N
        ha = self.ctx.h_amb_jet
        # contract in two steps: first over k, then over j
        tmp = [[[_sum(ha[k][j] * self.Dk[k][a][c] for k in range(N)) for c in range(n)]
                for a in range(n)] for j in range(N)]
        out = _obj((n, n, n, n))
        for a, b, c, d in np.ndindex(n, n, n, n):
            out[a, b, c, d] = _sum(tmp[j][a][c] * self.Dbj[j][b][d] for j in range(N))
        return out

    @cached_property
    def R4_common(self):
        """Terms of the curvature shared by R and S (everything but r(hh + hh))."""
        n, r = self.n, self.ctx.r_jet
        hh, hhb = self.hh, self.hhb
        xiDb = [[self.xiDk[b][d].conj() for d in range(n)] for b in range(n)]
        out = _obj((n, n, n, n))
        for a, b, c, d in np.ndindex(n, n, n, n):
            out[a, b, c, d] = (self.quad[a, b, c, d] - self.curlyR[a, b, c, d]
                               + hhb[b][d] * self.xiDk[a][c] + hh[a][c] * xiDb[b][d]
                               - r * hh[a][c] * hhb[b][d])
        return out

    @cached_property
    def R4(self):
        n, r, h = self.n, self.ctx.r_jet, self.h
        out = _obj((n, n, n, n))
        for a, b, c, d in np.ndindex(n, n, n, n):
            out[a, b, c, d] = self.R4_common[a, b, c, d] + r * (h[a][b] * h[c][d] + h[a][d] * h[c][b])
        return out

    @cached_property
    def dlogJ(self):
        """``D_{a bbar} log J``."""
        ctx, n = self.ctx, self.n
        oracle = LogDerivOracle(ctx.J_jet)
        return [[ctx.frame_deriv(oracle, (), ((a, False), (b, True))) for b in range(n)]
                for a in range(n)]

    @cached_property
    def Ric(self):
        n, r, h = self.n, self.ctx.r_jet, self.h
        return np.array([[r * h[a][b] * (n + 1) - self.dlogJ[a][b] for b in range(n)]
                         for a in range(n)], dtype=object)

    @cached_property
    def Rscal(self):
        n = self.n
        return _sum(self.hinv[b][a] * self.Ric[a, b] for a in range(n) for b in range(n))

    @cached_property
    def S_direct(self):
        """S assembled term by term from the closed curvature formula."""
        n, h, b = self.n, self.h, self.b
        c1 = b.coerce(Fraction(1, n + 2))
        c2 = b.coerce(Fraction(1, (n + 1) * (n + 2)))
        L = self.dlogJ
        trace = _sum(self.hinv[q][p] * L[p][q] for p in range(n) for q in range(n))
        out = _obj((n, n, n, n))
        for a, bb, c, d in np.ndindex(n, n, n, n):
            t1 = h[c][d] * L[a][bb] + h[c][bb] * L[a][d] + h[a][bb] * L[c][d] + h[a][d] * L[c][bb]
            t2 = (h[a][bb] * h[c][d] + h[a][d] * h[c][bb]) * trace
            out[a, bb, c, d] = self.R4_common[a, bb, c, d] + t1 * c1 - t2 * c2
        return out

    @cached_property
    def S_tracefree(self):
        """S as the tracefree projection of the curvature."""
        return webster_tracefree(self.R4, self.Ric, self.Rscal, self.h, self.n)

    @cached_property
    def S(self):
        """S from the direct formula, asserted equal to the tracefree projection."""
        direct, proj = self.S_direct, self.S_tracefree
        scale = max(1.0, _max_abs(self.R4))
        gap = _max_diff(direct, proj)
        if gap > ROUTE_TOL * scale * (0 if self.b.exact else 1):
            raise RouteDisagreement(
                f"closed-form S and tracefree projection differ by {gap:.3e}", gap=gap)
        return direct

    # -- tensors ---------------------------------------------------------------
    def tensor(self, data, kinds, weight=0):
        return Tensor(np.asarray(data, dtype=object), kinds, self.tag, weight)

    @cached_property
    def S_field(self):
        return self.tensor(self.S, CURVATURE_KINDS, 1)

    @cached_property
    def S_norm2(self):
        """``|S|^2`` as a jet."""
        n = self.n
        up = raise_all_data(self.S, CURVATURE_KINDS, self)
        return _sum(up[idx].conj() * self.S[idx] for idx in np.ndindex(n, n, n, n))

    @cached_property
    def divS(self):
        """``S_{a bbar c sbar,}^{sbar}`` (kinds L, LB, L)."""
        ctx = require_order(self.ctx, 5)
        if ctx is not self.ctx:
            return geometry(ctx).divS
        n = self.n
        dS = self.covd_data(self.S, CURVATURE_KINDS, "hol")
        out = _obj((n, n, n))
        for a, b, c in np.ndindex(n, n, n):
            out[a, b, c] = _sum(self.hinv[s][m] * dS[a, b, c, s, m] for s in range(n) for m in range(n))
        return out


def raise_all_data(data, kinds, geo):
    """Raise every lower Greek slot of a jet array."""
    T = Tensor(np.asarray(data, dtype=object), kinds, geo.tag)
    for s, k in enumerate(kinds):
        if not k.upper and not k.char:
            T = raise_index(T, s, geo.ctx)
    return T.data


def geometry(ctx):
    """The cached :class:`Geometry` of ``ctx``."""
    return ctx.cached("geometry", lambda: Geometry(ctx))


def _value_tensor(geo, data, kinds, weight=0):
    return Tensor(_values(data), kinds, geo.tag, weight)


# ---------------------------------------------------------------------------
# public operations


def second_fundamental(ctx):
    """Holomorphic part of the second fundamental form and the mean curvature.

    Returns
    -------
    II_hol : Tensor
        ``II(Z_a, Z_c) = II_hol[a, c] * xi``.
    H : ndarray
        Ambient components of ``H = -xi``.

    Raises
    ------
    HessianDegenerate
    """
    geo = geometry(require_order(ctx, 3))
    return _value_tensor(geo, geo.II, (L, L)), -ctx.xi


def torsion(ctx):
    """``A_{ab}`` from ``-i A = conj(xi^k) D_{ab}(rho_kbar) - |xi|^2 h_{ab}``."""
    geo = geometry(require_order(ctx, 3))
    return _value_tensor(geo, geo.A, (L, L))


def _check_spsh(ctx):
    G = np.array([[to_complex(x.value) for x in row] for row in ctx.G])
    G = (G + G.conj().T) / 2
    ev = np.linalg.eigvalsh(G)
    if ev.min() <= ctx.tol.matrix * max(1.0, abs(ev).max()):
        raise NotStrictlyPSH(f"smallest Hessian eigenvalue {ev.min():.3e}")


def torsion_liluk(ctx):
    """``A_{ab} = -(i/|d rho|^2) Z_a(rho_kbar) Z_b(rho^kbar)`` for strictly psh rho.

    Raises
    ------
    NotStrictlyPSH
    """
    ctx = require_order(ctx, 3)
    _check_spsh(ctx)
    geo = geometry(ctx)
    n, N = ctx.n, ctx.N
    za = [[ctx.zvec(ctx.d1b[k], a) for k in range(N)] for a in range(n)]
    zb = [[ctx.zvec(geo.rho_up[k], a) for k in range(N)] for a in range(n)]
    f = -geo.I / ctx.d_rho2
    out = _obj((n, n))
    for a in range(n):
        for c in range(n):
            out[a, c] = _sum(za[a][k] * zb[c][k] for k in range(N)).value * f
    return Tensor(out, (L, L), ctx.frame_tag)


def torsion_bracket(ctx):
    """Torsion straight from its definition via the bracket ``[T, Z_a]``."""
    geo = geometry(require_order(ctx, 3))
    return _value_tensor(geo, geo.A_bracket, (L, L))


def connection(ctx):
    """Point values of the connection coefficients (:class:`ConnectionCoeffs`)."""
    geo = geometry(require_order(ctx, 3))
    hol, anti, zero = geo.conn
    return ConnectionCoeffs(_values(hol), _values(anti), _values(zero))


def characteristic_residual(ctx):
    """Max of ``|theta(T) - 1|`` and ``|d theta(T, Z)|`` over the frame."""
    ctx = require_order(ctx, 3)
    geo = geometry(ctx)
    N, n = ctx.N, ctx.n
    xi = [x.value for x in ctx.xi_jet]
    xib = [x.value for x in ctx.xib_jet]
    I = geo.I
    theta_T = _sum(ctx.d1b[j].value * xib[j] for j in range(N))
    res = magnitude(theta_T - 1)
    G = [[x.value for x in row] for row in ctx.G]
    Tup = [I * x for x in xi]
    Tdn = [-I * x for x in xib]
    for a in range(n):
        hol = [ctx.backend.coerce(0)] * N
        hol[ctx.greek[a]] = ctx.backend.coerce(1)
        hol[ctx.w] = ctx.vw[a].value
        anti = [ctx.vwb[a].value if j == ctx.w else (1 if j == ctx.greek[a] else 0) for j in range(N)]
        # d theta = i rho_{j kbar} dz^j ^ dzbar^k
        for Y, Yb in ((hol, [0] * N), ([0] * N, anti)):
            v = _sum(G[j][k] * (Tup[j] * Yb[k] - Y[j] * Tdn[k]) for j in range(N) for k in range(N)) * I
            res = max(res, magnitude(v))
    return res


def curly_R(ctx):
    """The fourth-order frame derivative ``rho(Z_a, Z_bbar, Z_c, Z_dbar)``."""
    geo = geometry(require_order(ctx, 4))
    return _value_tensor(geo, geo.curlyR, CURVATURE_KINDS)


def curvature_general(ctx):
    """Curvature, Ricci, scalar curvature, S and torsion for any defining function.

    S is computed from its closed formula and checked against the tracefree
    projection of the curvature on every call.

    Raises
    ------
    RouteDisagreement
    """
    ctx = require_order(ctx, 4)
    geo = geometry(ctx)
    try:
        II = _value_tensor(geo, geo.II, (L, L))
    except HessianDegenerate:
        II = None
    S4 = _value_tensor(geo, geo.S, CURVATURE_KINDS, 1)
    if ctx.n == 1:
        # S vanishes identically in CR dimension one
        S4 = Tensor(S4.data * 0, CURVATURE_KINDS, S4.frame, S4.weight, {"cr_dimension_one"})
    return CurvaturePack(
        R4=_value_tensor(geo, geo.R4, CURVATURE_KINDS, 1),
        S4=S4,
        Ric=_value_tensor(geo, geo.Ric, (L, LB)),
        Rscal=geo.Rscal.value,
        A=_value_tensor(geo, geo.A, (L, L)),
        II_hol=II,
        Hnorm2=ctx.r,
    )


def _check_unit_hessian(ctx, tol=1e-12):
    N = ctx.N
    for j in range(N):
        for k in range(N):
            target = 1 if j == k else 0
            if magnitude(ctx.G[j][k].value - target) > tol:
                raise NotUnitHessian(f"rho_(j kbar) differs from the identity at ({j + 1}, {k + 1})")


def curvature_unit_hessian(ctx):
    """Curvature and S when ``rho_{j kbar}`` is the identity (second-order data only).

    Raises
    ------
    NotUnitHessian
    """
    _check_unit_hessian(ctx)
    n, b = ctx.n, ctx.backend
    h, hinv, hh = ctx.h, ctx.h_inv, ctx.h_hol
    hhb = np.array([[x.conjugate() for x in row] for row in hh], dtype=object)
    d2 = ctx.d_rho2
    inv = 1 / d2
    # h^m_{bbar} = h_{bbar sbar} h^{m sbar};  h^{nu m} = h^m_{bbar} h^{nu bbar}
    hmix = [[_sum(hhb[bb][s] * hinv[s][m] for s in range(n)) for bb in range(n)] for m in range(n)]
    hup = [[_sum(hmix[m][bb] * hinv[bb][nu] for bb in range(n)) for m in range(n)] for nu in range(n)]
    tr = _sum(hh[m][nu] * hup[nu][m] for m in range(n) for nu in range(n))
    c1 = b.coerce(Fraction(1, n + 2))
    c2 = b.coerce(Fraction(1, (n + 1) * (n + 2)))
    R = _obj((n, n, n, n))
    S = _obj((n, n, n, n))
    for a, bb, c, d in np.ndindex(n, n, n, n):
        pair = h[a][bb] * h[c][d] + h[a][d] * h[c][bb]
        R[a, bb, c, d] = (pair - hh[a][c] * hhb[bb][d]) * inv
        mix = _sum(hh[m][a] * hmix[m][bb] * h[c][d] + hh[m][c] * hmix[m][bb] * h[a][d]
                   + hh[m][a] * hmix[m][d] * h[c][bb] + hh[m][c] * hmix[m][d] * h[a][bb]
                   for m in range(n))
        S[a, bb, c, d] = (mix * c1 - hh[a][c] * hhb[bb][d] - tr * pair * c2) * inv
    tag = ctx.frame_tag
    Ric = _obj((n, n))
    for c, d in np.ndindex(n, n):
        Ric[c, d] = _sum(hinv[bb][a] * R[a, bb, c, d] for a in range(n) for bb in range(n))
    Rscal = _sum(hinv[d][c] * Ric[c, d] for c in range(n) for d in range(n))
    geo = geometry(require_order(ctx, 3))
    return CurvaturePack(
        R4=Tensor(R, CURVATURE_KINDS, tag, 1),
        S4=Tensor(S, CURVATURE_KINDS, tag, 1),
        Ric=Tensor(Ric, (L, LB), tag),
        Rscal=Rscal,
        A=_value_tensor(geo, geo.A, (L, L)),
        II_hol=_value_tensor(geo, geo.II, (L, L)),
        Hnorm2=ctx.r,
    )


def cmw_fefferman(ctx, tol=1e-6):
    """S for a defining function solving ``J = 1`` to second order.

    Raises
    ------
    NotApproxMongeAmpere
        If ``D_{a bbar} log J`` is not negligible at the point.
    """
    ctx = require_order(ctx, 4)
    geo = geometry(ctx)
    worst = _max_abs(geo.dlogJ)
    if worst > tol:
        raise NotApproxMongeAmpere(f"|D log J| = {worst:.3e} exceeds {tol:.1e}")
    return _value_tensor(geo, geo.R4_common, CURVATURE_KINDS, 1)


def kahler_tensor(ctx):
    """Chern curvature of ``i ddbar rho`` on the frame, all components."""
    ctx = require_order(ctx, 4)
    geo = geometry(ctx)
    n, N = ctx.n, ctx.N
    Gi = geo.Ginv
    out = _obj((n, n, n, n))
    for a, b, c, d in np.ndindex(n, n, n, n):
        q = _sum(Gi[k][j] * geo.Dk[k][a][c] * geo.Dbj[j][b][d] for j in range(N) for k in range(N))
        out[a, b, c, d] = (q - geo.curlyR[a, b, c, d]).value
    return Tensor(out, CURVATURE_KINDS, ctx.frame_tag)


def kahler_curvature(ctx, a, b, c, d):
    """One component ``R~(Z_a, Z_bbar, Z_c, Z_dbar)`` (0-based indices)."""
    return kahler_tensor(ctx).data[a, b, c, d]


def gauss_check(ctx):
    """Residuals of both Gauss equations.

    Returns
    -------
    (float, float)
        Curvature residual ``|R~ - R - r II (x) conj(II) + r (h h + h h)|``
        and torsion residual ``|A - i r II|``, both in max norm.
    """
    ctx = require_order(ctx, 4)
    geo = geometry(ctx)
    n = ctx.n
    K = kahler_tensor(ctx).data
    R = _values(geo.R4)
    II = _values(geo.II)
    h = ctx.h
    r = ctx.r
    res_c = 0.0
    for a, b, c, d in np.ndindex(n, n, n, n):
        rhs = (R[a, b, c, d] + r * II[a, c] * II[b, d].conjugate()
               - r * (h[c][b] * h[a][d] + h[a][b] * h[c][d]))
        res_c = max(res_c, magnitude(K[a, b, c, d] - rhs))
    A = _values(geo.A)
    res_t = max(magnitude(A[a, c] - geo.I * r * II[a, c]) for a in range(n) for c in range(n))
    return res_c, res_t


def field_tensor(ctx, f, order=None):
    """Wrap a scalar field as a rank-0 field tensor (a jet at the point)."""
    order = ctx.order if order is None else order
    jet = ctx.jet_evaluator(order).jet(lift(f, ctx.N))
    return Tensor(_scalar_array(jet), (), ctx.frame_tag)


def _scalar_array(x):
    a = _obj(())
    a[()] = x
    return a


def covariant_derivative(T, direction, ctx):
    """Covariant derivative of a field tensor; the new slot is appended last.

    ``direction`` is ``"hol"`` (all Z_m), ``"anti"`` (all Z_mbar) or ``"T"``
    (characteristic direction, appended as a length-one slot).

    Raises
    ------
    ComponentNotField
    """
    if not T.is_field():
        raise ComponentNotField("covariant derivatives need field components (jets), not values")
    return geometry(ctx).covd(T, direction)


def sublaplacian(f, ctx, convention=None):
    """``Delta_b f`` of a real scalar field at the point.

    ``convention="negative-sum"`` gives ``-(f_{,a}^{a} + f_{,abar}^{abar})``;
    ``"positive-sum"`` drops the sign.  Default: :data:`crweyl.config.DELTA_B`.
    """
    ctx = require_order(ctx, 3)
    jet = ctx.jet_evaluator(2).jet(lift(f, ctx.N))
    return geometry(ctx).sublaplacian(jet, convention).value


# -- Schouten, T and Cotton-type tensors -------------------------------------


def _pe_residual(geo):
    n = geo.n
    R = geo.Rscal.value
    Ric = _values(geo.Ric)
    h = _values(geo.h)
    scale = max(1.0, _max_abs(Ric))
    return max(magnitude(Ric[a, b] - R * h[a][b] / n) for a in range(n) for b in range(n)) / scale


def schouten_data(geo):
    n, b = geo.n, geo.b
    c = b.coerce(Fraction(1, 2 * (n + 1)))
    k = b.coerce(Fraction(1, n + 2))
    R = geo.Rscal
    return np.array([[(geo.Ric[a, bb] - R * c * geo.h[a][bb]) * k for bb in range(n)]
                     for a in range(n)], dtype=object)


def t_data(geo):
    """``T_a = (R_{,a}/(2(n+1)) - i A_{a s,}^{s})/(n+2)`` as jets."""
    n, b = geo.n, geo.b
    dA = geo.covd_data(geo.A, (L, L), "anti")
    c = b.coerce(Fraction(1, 2 * (n + 1)))
    k = b.coerce(Fraction(1, n + 2))
    out = _obj((n,))
    for a in range(n):
        div = _sum(geo.hinv[t][s] * dA[a, s, t] for s in range(n) for t in range(n))
        out[a] = (geo.ctx.zvec(geo.Rscal, a) * c - div * geo.I) * k
    return out


def v_data(geo):
    """``V_{a bbar c}`` by its definition, jets."""
    n, I = geo.n, geo.I
    dA = geo.covd_data(geo.A, (L, L), "anti")
    dP = geo.covd_data(schouten_data(geo), (L, LB), "hol")
    T = t_data(geo)
    out = _obj((n, n, n))
    for a, b, c in np.ndindex(n, n, n):
        out[a, b, c] = (dA[a, c, b] + dP[a, b, c] * I - T[c] * geo.h[a][b] * I
                        - T[a] * geo.h[c][b] * I * 2)
    return out


def v_data_pe(geo):
    """``V`` through the pseudo-Einstein shortcut."""
    n, b, I = geo.n, geo.b, geo.I
    dA = geo.covd_data(geo.A, (L, L), "anti")
    k = b.coerce(Fraction(1, n * (n + 1)))
    dR = [geo.ctx.zvec(geo.Rscal, a) for a in range(n)]
    out = _obj((n, n, n))
    for a, bb, c in np.ndindex(n, n, n):
        out[a, bb, c] = dA[a, c, bb] + (dR[c] * geo.h[a][bb] + dR[a] * geo.h[c][bb]) * k * I
    return out


def schouten(ctx):
    """``P_{a bbar} = (Ric - R h/(2(n+1)))/(n+2)``."""
    geo = geometry(require_order(ctx, 4))
    return _value_tensor(geo, schouten_data(geo), (L, LB))


def t_tensor(ctx):
    geo = geometry(require_order(ctx, 5))
    return _value_tensor(geo, t_data(geo), (L,))


def v_tensor(ctx, pe_tol=1e-8):
    """``V_{a bbar c}``; on pseudo-Einstein structures both formulas are compared.

    Raises
    ------
    RouteDisagreement
    """
    geo = geometry(require_order(ctx, 5))
    V = v_data(geo)
    if _pe_residual(geo) < pe_tol:
        Vpe = v_data_pe(geo)
        gap = _max_diff(V, Vpe)
        if gap > 1e-8 * max(1.0, _max_abs(V)):
            raise RouteDisagreement(f"V by definition and by the pseudo-Einstein shortcut differ by {gap:.3e}")
    return _value_tensor(geo, V, (L, LB, L))


def div_cmw(ctx):
    """``S_{a bbar c sbar,}^{sbar}`` as a value tensor (kinds L, LB, L)."""
    geo = geometry(require_order(ctx, 5))
    return _value_tensor(geo, geo.divS, (L, LB, L))


def is_pseudo_einstein(ctx, tol=1e-8):
    return _pe_residual(geometry(require_order(ctx, 4))) < tol


__all__ = ["ConnectionCoeffs", "CurvaturePack", "Geometry", "geometry", "second_fundamental",
           "torsion", "torsion_liluk", "torsion_bracket", "connection", "characteristic_residual",
           "curly_R", "curvature_general", "curvature_unit_hessian", "cmw_fefferman",
           "kahler_tensor", "kahler_curvature", "gauss_check", "field_tensor",
           "covariant_derivative", "sublaplacian", "schouten", "t_tensor", "v_tensor",
           "div_cmw", "is_pseudo_einstein", "require_order"]
