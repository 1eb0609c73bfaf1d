"""Tanaka-Webster data: torsion, connection, curvature, S, Gauss equations."""
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crweyl import pseudohermitian as ph
from crweyl.backend import QQi, get_backend, magnitude
from crweyl.catalog import CATALOG, e_norm_s2, random_tracefree_quartic
from crweyl.errors import ComponentNotField, HessianDegenerate, NotApproxMongeAmpere
from crweyl.field import constant, field_diff, field_eval, from_text
from crweyl.frame import context_build, squared_wrapper
from crweyl.tensor import cmw_norm, metric_tensor, raise_index

from .conftest import close, surface

MP = get_backend("float", 128)


def _gap(A, B):
    """Component gap between tensors expressed in two frames over the same point."""
    return max(magnitude(x - y) for x, y in zip(A.data.flat, B.data.flat))


# -- sphere --------------------------------------------------------------------

def test_sphere_curvature(sphere_ctx):
    P = ph.curvature_general(sphere_ctx)
    assert P.S4.max_abs() < 1e-35
    assert P.A.max_abs() < 1e-35
    assert close(P.Rscal, 6)
    for a in range(2):
        for b in range(2):
            assert close(P.Ric.data[a, b], 3 * int(a == b))


def test_sphere_unit_hessian_route(sphere_ctx):
    U = ph.curvature_unit_hessian(sphere_ctx)
    R = U.R4.data
    assert close(R[0, 0, 0, 0], 2) and close(R[0, 0, 1, 1], 1) and close(R[0, 1, 1, 0], 1)
    assert magnitude(R[0, 1, 0, 1]) < 1e-35
    assert U.S4.max_abs() < 1e-35


def test_sphere_fefferman_route_and_kahler(sphere_ctx):
    assert ph.cmw_fefferman(sphere_ctx).max_abs() < 1e-35
    assert ph.kahler_tensor(sphere_ctx).max_abs() < 1e-35
    II, _ = ph.second_fundamental(sphere_ctx)
    assert II.max_abs() < 1e-35


def test_sphere_connection_vanishes_at_pole(sphere_ctx):
    cc = ph.connection(sphere_ctx)
    assert max(magnitude(x) for x in cc.gammaHol.flat) < 1e-35
    assert max(magnitude(x) for x in cc.gammaAnti.flat) < 1e-35


# -- E(1/2) at p0 = (1/sqrt 2, 0, i) --------------------------------------------

def test_ellipsoid_torsion_routes(e_ctx):
    # three independent routes agree; value +4i/3 (see README for the sign discussion)
    routes = [ph.torsion(e_ctx), ph.torsion_liluk(e_ctx), ph.torsion_bracket(e_ctx)]
    for A in routes:
        assert close(A.data[0, 0], QQi(0, Fraction(4, 3)))
        assert magnitude(A.data[0, 1]) < 1e-35 and magnitude(A.data[1, 1]) < 1e-35


def test_ellipsoid_connection_closed_form(e_ctx, p0):
    # omega_a^c(Z_b) = a zbar_a zbar_b z_c / (rho_w^2 |d rho|^2) with rho_w = -i/2 at p0
    a = Fraction(1, 2)
    z = p0[:2]
    rho_w2 = MP.coerce(-Fraction(1, 4))
    cc = ph.connection(e_ctx)
    for al, be, ga in np.ndindex(2, 2, 2):
        want = a * z[al].conjugate() * z[be].conjugate() * z[ga] / (rho_w2 * Fraction(3, 4))
        assert close(cc.gammaHol[al][ga][be], want)


def test_ellipsoid_norm_matches_closed_form(e_ctx, p0):
    S = ph.curvature_general(e_ctx).S4
    assert close(cmw_norm(S, e_ctx), Fraction(8, 2187), 1e-30)
    assert close(e_norm_s2(Fraction(1, 2), p0[:2], p0[2]), Fraction(8, 2187), 1e-30)


def test_ellipsoid_gauss_and_unit_route(e_ctx):
    res_c, res_t = ph.gauss_check(e_ctx)
    assert res_c < 1e-9 and res_t < 1e-9
    assert ph.curly_R(e_ctx).max_abs() < 1e-35
    assert ph.kahler_tensor(e_ctx).max_abs() < 1e-30
    U = ph.curvature_unit_hessian(e_ctx)
    assert U.S4.max_diff(ph.curvature_general(e_ctx).S4) < 1e-30


def test_ellipsoid_is_not_fefferman_normalized(e_ctx):
    with pytest.raises(NotApproxMongeAmpere):
        ph.cmw_fefferman(e_ctx)


@pytest.mark.parametrize("C", [Fraction(1, 2), Fraction(2)])
def test_squared_wrapper_invariance(e_half, p0, C):
    c = context_build(e_half, p0, MP)
    cw = context_build(squared_wrapper(e_half, C), p0, MP)
    P, Pw = ph.curvature_general(c), ph.curvature_general(cw)
    assert _gap(Pw.R4, P.R4) < 1e-30
    assert _gap(Pw.S4, P.S4) < 1e-30
    assert _gap(Pw.A, P.A) < 1e-30


# -- tube ------------------------------------------------------------------------

def test_tube_ricci_and_scalar(tube_ctx):
    P = ph.curvature_general(tube_ctx)
    h = tube_ctx.h
    assert close(P.Rscal, 2)
    assert all(close(P.Ric.data[a, b], h[a][b]) for a in range(2) for b in range(2))
    assert ph.is_pseudo_einstein(tube_ctx)


def test_tube_unit_hessian_uses_gradient_two(tube_ctx):
    assert close(tube_ctx.d_rho2, 2)
    U = ph.curvature_unit_hessian(tube_ctx)
    assert U.R4.max_diff(ph.curvature_general(tube_ctx).R4) < 1e-30


def test_tube_connection_forms(tube_ctx):
    cc = ph.connection(tube_ctx)
    for b, c in np.ndindex(2, 2):
        assert close(cc.gammaT[b][c], -0.5j * int(b == c), 1e-30)


def test_tube_s_is_parallel(tube_ctx):
    geo = ph.geometry(ph.require_order(tube_ctx, 5))
    for d in ("hol", "anti", "T"):
        assert geo.covd(geo.S_field, d).max_abs() < 1e-30


def test_tube_sublaplacian_of_norm_vanishes(tube_ctx):
    geo = ph.geometry(ph.require_order(tube_ctx, 6))
    assert magnitude(geo.sublaplacian(geo.S_norm2).value) < 1e-30


def test_tube_v_contracts_to_zero(tube_ctx):
    V = ph.v_tensor(tube_ctx).data
    S = ph.curvature_general(tube_ctx).S4
    Sup = raise_index(raise_index(raise_index(S, 1, tube_ctx), 0, tube_ctx), 3, tube_ctx).data
    for r in range(2):
        acc = sum(Sup[r, a, b, g] * V[a, b, g] for a, b, g in np.ndindex(2, 2, 2))
        assert magnitude(acc) < 1e-30


# -- degenerate Hessian and normal form --------------------------------------------

def test_normal_form_curly_r_and_kahler(exact):
    s, _, p = surface("normal-form", seed=7)
    c = random_tracefree_quartic(p["seed"])
    nf = context_build(s, (QQi(0),) * 3, exact)
    R = ph.curly_R(nf).data
    for idx in np.ndindex(2, 2, 2, 2):
        assert R[idx] == QQi.coerce(c[idx])
    with pytest.raises(HessianDegenerate):
        ph.kahler_tensor(nf)
    w = context_build(squared_wrapper(s, 1), (QQi(0),) * 3, exact)
    K = ph.kahler_tensor(w).data
    Rw = ph.curly_R(w).data
    # only the fourth-order term survives at the origin
    assert all(K[idx] == -Rw[idx] for idx in np.ndindex(2, 2, 2, 2))


def test_pluriharmonic_curly_r_vanishes():
    s, entry, p = surface("pluriharmonic", seed=11, eps=Fraction(1, 5))
    ctx = context_build(s, entry.random_point(p, random.Random(1), MP), MP)
    assert ph.curly_R(ctx).max_abs() < 1e-30
    # Re psi is pluriharmonic, so the complex Hessian is the identity and S
    # only involves second-order data
    U = ph.curvature_unit_hessian(ctx)
    assert U.S4.max_diff(ph.curvature_general(ctx).S4) < 1e-25


# -- covariant derivatives and the sub-Laplacian ----------------------------------------

def test_metric_is_parallel(e_ctx):
    ctx = ph.require_order(e_ctx, 4)
    h = metric_tensor(ctx, field=True)
    for d in ("hol", "anti", "T"):
        assert ph.covariant_derivative(h, d, ctx).max_abs() < 1e-30


def test_value_tensors_cannot_be_differentiated(e_ctx):
    with pytest.raises(ComponentNotField):
        ph.covariant_derivative(metric_tensor(e_ctx), "hol", e_ctx)


def test_scalar_gradient_is_frame_derivative(e_half, e_ctx):
    f = from_text("z1*conj(z3) + conj(z1)*z3 + 2*z2*conj(z2)*z1", 3)
    grad = ph.covariant_derivative(ph.field_tensor(e_ctx, f), "hol", e_ctx).data
    pt = e_ctx.coords
    rho = e_half.rho
    rw = field_eval(field_diff(rho, 2), pt, MP)
    fw = field_eval(field_diff(f, 2), pt, MP)
    for a in range(2):
        want = field_eval(field_diff(f, a), pt, MP) - field_eval(field_diff(rho, a), pt, MP) / rw * fw
        assert close(grad[a].value, want, 1e-30)


def test_sublaplacian_of_constant():
    s = CATALOG["sphere"].build({"n": Fraction(2)})
    ctx = context_build(s, (0, 0, 1), MP)
    assert magnitude(ph.sublaplacian(constant(5, 3), ctx)) == 0


def test_sublaplacian_term_assembly(mp):
    from crweyl.catalog import point_place
    s = CATALOG["sphere"].build({"n": Fraction(2)})
    pt = point_place(s, (0.3 + 0.1j, -0.2 + 0.4j, 0.5 - 0.2j), "radial", mp)
    ctx = ph.require_order(context_build(s, pt, mp), 4)
    f = from_text("(1/2)*(z1 + conj(z1))", 3)
    cc = ph.connection(ctx)
    fj = ctx.jet_evaluator(4).jet(f)
    hinv = ctx.h_inv
    first = [ctx.zvec(fj, a) for a in range(2)]
    firstb = [ctx.zvec(fj, a, True) for a in range(2)]
    total = 0
    for a in range(2):
        for b in range(2):
            # f_{,a bbar} + f_{,bbar a}
            fab = ctx.zvec(first[a], b, True).value - sum(cc.gammaAnti[a][g][b] * first[g].value for g in range(2))
            fba = ctx.zvec(firstb[b], a).value - sum(cc.gammaAnti[b][g][a].conjugate() * firstb[g].value
                                                     for g in range(2))
            total += hinv[b][a] * (fab + fba)
    assert close(ph.sublaplacian(f, ctx, "positive-sum"), total, 1e-30)
    assert close(ph.sublaplacian(f, ctx, "negative-sum"), -total, 1e-30)


# -- properties -------------------------------------------------------------------

_SURF = [("sphere", {"n": 2}), ("ellipsoid-rev", {"a": Fraction(1, 2)}),
         ("ellipsoid-rev", {"a": Fraction(-1, 3)}), ("tube", {"n": 2}),
         ("pluriharmonic", {"seed": 2, "eps": Fraction(1, 10)}),
         ("ellipsoid", {"a1": Fraction(1, 3), "a3": Fraction(-1, 4), "b2": Fraction(2)})]


def _ctx(k, seed):
    s, entry, p = surface(_SURF[k][0], **_SURF[k][1])
    return context_build(s, entry.random_point(p, random.Random(seed), MP), MP)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, len(_SURF) - 1), st.integers(0, 10**6))
def test_structure_identities(k, seed):
    ctx = _ctx(k, seed)
    P = ph.curvature_general(ctx)
    n = ctx.n
    assert abs(P.Rscal.imag) < 1e-10
    assert all(magnitude(P.A.data[a, b] - P.A.data[b, a]) < 1e-25 for a in range(n) for b in range(n))
    assert max(ph.gauss_check(ctx)) < 1e-9
    assert ph.characteristic_residual(ctx) < 1e-25
    assert ph.torsion_bracket(ctx).max_diff(P.A) < 1e-25 * max(1.0, P.A.max_abs())


@settings(max_examples=10, deadline=None)
@given(st.integers(0, len(_SURF) - 1), st.integers(0, 10**6), st.sampled_from([Fraction(1, 2), Fraction(2)]))
def test_squared_wrapper_property(k, seed, C):
    ctx = _ctx(k, seed)
    w = context_build(squared_wrapper(ctx.surface, C), ctx.coords, MP)
    P, Pw = ph.curvature_general(ctx), ph.curvature_general(w)
    scale = max(1.0, P.R4.max_abs())
    assert _gap(Pw.R4, P.R4) < 1e-25 * scale
    assert _gap(Pw.S4, P.S4) < 1e-25 * scale
    assert _gap(Pw.A, P.A) < 1e-25 * scale
