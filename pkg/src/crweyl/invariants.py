"""Dimension-five invariants on the volume-normalized (pseudo-Einstein) scale.

The canonical scale is realized by rebuilding the whole frame pipeline on
the composite defining function ``J(rho)^{-1/(n+2)} rho``; the classical
transformation formulas (torsion, connection, S under ``theta -> e^u
theta``) are kept only as the second route of :func:`x_alpha`.

Jet budget: X needs covariant derivatives of S, so five derivatives beyond
rho; its divergence and the sub-Laplacian in I' need six.  Contexts are
deepened automatically.
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .backend import im_part, magnitude, re_part
from .errors import (BackendError, NotPositiveFactor, NotPositiveJ, RouteDisagreement,
                     WrongDimension)
from .field import field_eval, lift
from .field import log as f_log
from .field import mul as f_mul
from .field import powrat
from .frame import FrameContext, fefferman_field
from .pseudohermitian import (_max_abs, _obj, _sum, _values, geometry, raise_all_data,
                              require_order)
from .tensor import CURVATURE_KINDS, LB, L, Tensor, raise_index

PE_ORDER = 6
X_ROUTE_TOL = 1e-7
X_ROUTE_ABORT = 1e-6


@dataclass
class PEScale:
    """Volume-normalized scale of a hypersurface at one point.

    ``u = -log J(rho)/(n+2)`` and ``rhoTilde = J(rho)^{-1/(n+2)} rho``;
    ``ctxTilde`` is the frame context of ``rhoTilde`` at the same point and
    ``ctx`` the original one (deepened to the same order).
    """

    u: object
    rhoTilde: object
    ctxTilde: FrameContext
    ctx: FrameContext
    J_tilde: object
    pe_residual: float


@dataclass
class DimFiveInvariants:
    normS2: object
    X: np.ndarray
    Iprime: object
    divX: object


def _require_dim_five(ctx):
    if ctx.n != 2:
        raise WrongDimension(f"defined for CR dimension 2 only, got n={ctx.n}")


def pe_scale(ctx, order=PE_ORDER):
    """Rebuild ``ctx`` on the volume-normalized defining function.

    Raises
    ------
    NotPositiveJ
        If ``J(rho) <= 0`` at the point.
    BackendError
        For the exact backend (fractional powers are not exact).
    """
    if ctx.backend.exact:
        raise BackendError("the pseudo-Einstein scale needs a floating backend")
    J = ctx.J
    if magnitude(im_part(J)) > 1e-12 * max(1.0, magnitude(J)) or re_part(J) <= 0:
        raise NotPositiveJ(f"J(rho) = {J} is not positive at the point")
    n = ctx.n
    surface = ctx.surface
    Jf = fefferman_field(surface.rho, n)
    rho_t = f_mul(powrat(Jf, Fraction(-1, n + 2)), surface.rho)
    u = f_mul(lift(Fraction(-1, n + 2), ctx.N), f_log(Jf))
    base = require_order(ctx, order)
    tilde = FrameContext(surface.with_rho(rho_t, name=f"{surface.name} (pe scale)"),
                         ctx.coords, ctx.backend, order, ctx.tol)
    geo = geometry(tilde)
    R = geo.Rscal.value
    Ric = _values(geo.Ric)
    h = tilde.h
    res = max(magnitude(Ric[a, b] - R * h[a][b] / n) for a in range(n) for b in range(n))
    res /= max(1.0, _max_abs(Ric))
    return PEScale(u, rho_t, tilde, base, tilde.J, res)


# ---------------------------------------------------------------------------
# X_alpha


def x_direct_data(geo):
    """``X_a = 1/2 S_{a bbar c sbar} (div S)^{bbar c sbar} + 1/4 Z_a |S|^2`` as jets."""
    n = geo.n
    div = geo.divS
    up = raise_all_data(div, (L, LB, L), geo)
    S = geo.S
    quarter = geo.b.coerce(Fraction(1, 4))
    half = geo.b.coerce(Fraction(1, 2))
    out = _obj((n,))
    for a in range(n):
        s = _sum(S[a, b, c, d] * up[b, c, d] for b in range(n) for c in range(n) for d in range(n))
        out[a] = s * half + geo.ctx.zvec(geo.S_norm2, a) * quarter
    return out


def x_transform_data(ctx):
    """``X~`` of the volume-normalized scale from data of ``theta`` alone.

    Uses the torsion change ``-i A~ = -i A + u_{a,b} - u_a u_b``, the
    connection change ``omega~_a^m(Z_cbar) = omega_a^m(Z_cbar) - u^m h_{a
    cbar}``, ``S~_a^{m nbar c} = e^{-2u} S_a^{m nbar c}`` and the
    pseudo-Einstein form of the Cotton tensor, under which only ``A~_{m c,
    nbar}`` survives the contraction with S~.
    """
    geo = geometry(require_order(ctx, 5))
    ctx = geo.ctx
    n, b, I = geo.n, geo.b, geo.I
    u = ctx.J_jet.log() * b.coerce(Fraction(-1, n + 2))
    ud = [ctx.zvec(u, a) for a in range(n)]
    udb = [ctx.zvec(u, a, True) for a in range(n)]
    u_up = [_sum(geo.hinv[v][m] * udb[v] for v in range(n)) for m in range(n)]
    ud_arr = _obj((n,))
    for a in range(n):
        ud_arr[a] = ud[a]
    du = geo.covd_data(ud_arr, (L,), "hol")
    At = _obj((n, n))
    for a in range(n):
        for c in range(n):
            At[a, c] = geo.A[a, c] + (du[a, c] - ud[a] * ud[c]) * I
    _, anti, _ = geo.conn
    # omega~_a^m(Z_cbar)
    om = _obj((n, n, n))
    for a, m, c in np.ndindex(n, n, n):
        om[a, m, c] = anti[a, m, c] - u_up[m] * geo.h[a][c]
    dAt = _obj((n, n, n))
    for a, c, g in np.ndindex(n, n, n):
        t = ctx.zvec(At[a, c], g, True)
        t = t - _sum(om[a, m, g] * At[m, c] + om[c, m, g] * At[a, m] for m in range(n))
        dAt[a, c, g] = t
    S = Tensor(geo.S, CURVATURE_KINDS, geo.tag)
    for s in (1, 2, 3):
        S = raise_index(S, s, ctx)
    Sm = S.data
    e2u = ctx.J_jet.powr(Fraction(2, n + 2))  # e^{-2u}
    norm_t = geo.S_norm2 * e2u
    quarter = b.coerce(Fraction(1, 4))
    out = _obj((n,))
    for a in range(n):
        s = _sum(Sm[a, m, v, c] * dAt[m, c, v] for m in range(n) for v in range(n) for c in range(n))
        out[a] = -(s * e2u) * I + ctx.zvec(norm_t, a) * quarter
    return out


def x_alpha(pe, check=True):
    """``X~_a`` on the volume-normalized scale (frame components).

    Route A differentiates S directly in the rebuilt context; route B
    transforms data of the original ``theta``.  They must agree.

    Raises
    ------
    WrongDimension, RouteDisagreement
    """
    _require_dim_five(pe.ctx)
    XA = _values(x_direct_data(geometry(pe.ctxTilde)))
    if check:
        XB = _values(x_transform_data(pe.ctx))
        scale = max(1e-300, max(magnitude(x) for x in XA), max(magnitude(x) for x in XB))
        gap = max(magnitude(x - y) for x, y in zip(XA, XB))
        if gap > X_ROUTE_ABORT * max(scale, 1e-12):
            raise RouteDisagreement(f"X routes differ by {gap:.3e} (scale {scale:.3e})", gap=gap)
    return XA


def x_routes(pe):
    """Both X routes as value arrays ``(direct, transformed)``."""
    _require_dim_five(pe.ctx)
    return _values(x_direct_data(geometry(pe.ctxTilde))), _values(x_transform_data(pe.ctx))


def x_general(ctx):
    """``X_a`` of ``theta = i dbar rho`` itself (no rescaling), route A."""
    _require_dim_five(ctx)
    return _values(x_direct_data(geometry(require_order(ctx, 5))))


# ---------------------------------------------------------------------------
# I' and div X


def i_prime_jet(geo, convention=None):
    """``-1/8 Delta_b |S|^2 + 1/4 |div S|^2 + 1/12 R |S|^2`` (jet of order K-6)."""
    n, b = geo.n, geo.b
    norm = geo.S_norm2
    lap = geo.sublaplacian(norm, convention)
    div = geo.divS
    up = raise_all_data(div, (L, LB, L), geo)
    dnorm = _sum(up[idx].conj() * div[idx] for idx in np.ndindex(n, n, n))
    return (lap * b.coerce(Fraction(-1, 8)) + dnorm * b.coerce(Fraction(1, 4))
            + geo.Rscal * norm * b.coerce(Fraction(1, 12)))


def i_prime_at(ctx, convention=None):
    """I' of ``theta = i dbar rho`` at the point (no rescaling)."""
    _require_dim_five(ctx)
    return i_prime_jet(geometry(require_order(ctx, 6)), convention).value


def i_prime(pe, convention=None):
    """I' on the volume-normalized scale."""
    _require_dim_five(pe.ctx)
    return i_prime_at(pe.ctxTilde, convention)


def div_x_at(ctx):
    """``Re nabla^a X_a`` of ``theta = i dbar rho`` (X by route A)."""
    _require_dim_five(ctx)
    geo = geometry(require_order(ctx, 6))
    n = geo.n
    X = x_direct_data(geo)
    dX = geo.covd_data(X, (L,), "anti")
    v = _sum(geo.hinv[b][a] * dX[a, b] for a in range(n) for b in range(n)).value
    return re_part(v)


def div_x(pe):
    """``Re nabla~^a X~_a`` on the volume-normalized scale."""
    _require_dim_five(pe.ctx)
    return div_x_at(pe.ctxTilde)


def norm_s2(ctx):
    return geometry(require_order(ctx, 4)).S_norm2.value


def dim_five(ctx, check_routes=True):
    """All dimension-five invariants on the canonical scale.

    Returns
    -------
    DimFiveInvariants
    """
    _require_dim_five(ctx)
    pe = pe_scale(ctx)
    return DimFiveInvariants(
        normS2=norm_s2(pe.ctxTilde),
        X=x_alpha(pe, check=check_routes),
        Iprime=i_prime(pe),
        divX=div_x(pe),
    )


# ---------------------------------------------------------------------------
# conformal transformation law


def conformal_law_check(ctx, f, convention=None):
    """Residual of ``e^{3 Y} I'~ = I' + 2 Re X^c Y_c`` for ``theta~ = f theta``.

    Both sides are computed by the full pipeline: ``theta`` from rho and
    ``theta~`` from ``f * rho``, with ``Y = log f``.  ``convention`` selects
    the sub-Laplacian sign (default :data:`crweyl.config.DELTA_B`).

    Raises
    ------
    WrongDimension, NotPositiveFactor
    """
    _require_dim_five(ctx)
    ctx = require_order(ctx, 6)
    f = lift(f, ctx.N)
    fv = field_eval(f, ctx.coords, ctx.backend)
    if magnitude(im_part(fv)) > 1e-12 * max(1.0, magnitude(fv)) or re_part(fv) <= 0:
        raise NotPositiveFactor(f"conformal factor {fv} is not positive at the point")
    n = ctx.n
    I0 = i_prime_at(ctx, convention)
    X = x_general(ctx)
    hinv = ctx.h_inv
    fj = ctx.jet_evaluator(1).jet(f)
    dY = [ctx.zvec(fj, c).value / fv for c in range(n)]
    XY = _sum(hinv[b][c] * X[b].conjugate() * dY[c] for b in range(n) for c in range(n))
    other = ctx.cached(("rescaled", f), lambda: FrameContext(
        ctx.surface.with_rho(f_mul(f, ctx.surface.rho)), ctx.coords, ctx.backend, ctx.order, ctx.tol))
    I1 = i_prime_at(other, convention)
    return magnitude(fv ** 3 * I1 - I0 - 2 * re_part(XY))


# ---------------------------------------------------------------------------
# tube power coefficients


def ck_dk(n, k):
    """Exact ``(c_k, d_k)`` of ``S[k] = c_k h h^{..} + d_k (delta delta + delta delta)``.

    The closed forms are checked against the recursion
    ``c_{k+1} = n c_1 c_k + 2 c_k d_1 + 2 c_1 d_k``, ``d_{k+1} = 2 d_1 d_k``.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    n1 = Fraction(n + 1)
    c1, d1 = Fraction(-1, 2), 1 / (2 * n1)
    c, d = c1, d1
    for _ in range(k - 1):
        c, d = n * c1 * c + 2 * c * d1 + 2 * c1 * d, 2 * d1 * d
    closed_c = (Fraction(2 - n - n * n, 2) ** k - 1) / (n * n1 ** k)
    closed_d = Fraction(1, 2) / n1 ** k
    if (c, d) != (closed_c, closed_d):
        raise AssertionError("closed forms disagree with the recursion")
    return c, d


def tube_power_check(ctx, k):
    """Fit ``S[k]`` to the two-parameter form; return ``(residual, c, d)``."""
    from .tensor import cmw_power
    geo = geometry(require_order(ctx, 4))
    n = ctx.n
    S = Tensor(_values(geo.S), CURVATURE_KINDS, ctx.frame_tag)
    Sk = cmw_power(S, k, ctx).data
    hh = ctx.h_hol
    hinv = ctx.h_inv
    hup = [[_sum(hinv[b][x] * hinv[d][y] * hh[b][d].conjugate() for b in range(n) for d in range(n))
            for y in range(n)] for x in range(n)]
    rows, rhs = [], []
    for a1, a2, m1, m2 in np.ndindex(n, n, n, n):
        P = complex(hh[a1][m1] * hup[a2][m2])
        B = float((a1 == a2) * (m1 == m2) + (a1 == m2) * (m1 == a2))
        rows.append([P, B])
        rhs.append(complex(Sk[a1, a2, m1, m2]))
    coef, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    resid = float(np.max(np.abs(np.array(rows) @ coef - np.array(rhs))))
    return resid, coef[0], coef[1]


__all__ = ["PEScale", "DimFiveInvariants", "pe_scale", "x_alpha", "x_routes", "x_general",
           "i_prime", "i_prime_at", "div_x", "div_x_at", "norm_s2", "dim_five",
           "conformal_law_check", "ck_dk", "tube_power_check"]
