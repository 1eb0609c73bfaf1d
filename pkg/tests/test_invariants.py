"""Volume-normalized scale, X, I', div X, the conformal law and tube powers."""
import random
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crweyl import invariants as inv
from crweyl import pseudohermitian as ph
from crweyl.backend import QQi, get_backend, magnitude
from crweyl.catalog import (CATALOG, e_x_tilde, ellipsoid_rev_point, tube_norm_s2, tube_s_power)
from crweyl.errors import BackendError, NotPositiveFactor, NotPositiveJ, WrongDimension
from crweyl.field import constant, field_eval, from_text
from crweyl.frame import Hypersurface, context_build, scaled
from crweyl.tensor import cmw_power_scalar

from .conftest import close, surface

MP = get_backend("float", 128)
HALF = Fraction(1, 2)


@pytest.fixture(scope="module")
def e_pe(e_ctx):
    return inv.pe_scale(e_ctx)


# -- the volume-normalized scale -------------------------------------------------

def test_sphere_scale_is_trivial(sphere_ctx):
    pe = inv.pe_scale(sphere_ctx)
    assert close(pe.J_tilde, 1)
    assert magnitude(field_eval(pe.u, sphere_ctx.coords, MP)) < 1e-35
    assert all(close(pe.ctxTilde.h[a][b], sphere_ctx.h[a][b]) for a in range(2) for b in range(2))


def test_ellipsoid_scale(e_pe, e_ctx):
    # J = |d rho|^2 = 3/4 on E(a), so e^u = (3/4)^(-1/4)
    u = field_eval(e_pe.u, e_ctx.coords, MP)
    assert close(gmpy2.exp(u), (gmpy2.mpfr(3) / 4) ** gmpy2.mpfr(-0.25), 1e-30)
    assert close(e_pe.J_tilde, 1, 1e-8)
    assert e_pe.pe_residual < 1e-7


def test_scale_requires_float_backend(exact):
    s = CATALOG["sphere"].build({"n": Fraction(2)})
    ctx = context_build(s, (QQi(0), QQi(0), QQi(1)), exact)
    with pytest.raises(BackendError):
        inv.pe_scale(ctx)


def test_negative_j_rejected():
    s = Hypersurface("1 - z1*conj(z1) - z2*conj(z2)", 1)
    ctx = context_build(s, (0, 1), MP)
    with pytest.raises(NotPositiveJ):
        inv.pe_scale(ctx)


# -- X ----------------------------------------------------------------------------

def test_x_vanishes_on_sphere_and_tube(sphere_ctx, tube_ctx):
    assert max(magnitude(x) for x in inv.x_alpha(inv.pe_scale(sphere_ctx))) < 1e-35
    assert max(magnitude(x) for x in inv.x_general(tube_ctx)) < 1e-30


def test_x_on_ellipsoid_at_p0(e_pe, p0):
    X = inv.x_alpha(e_pe)
    want = e_x_tilde(HALF, p0[:2], p0[2])
    assert close(X[0], want[0], 1e-30)
    assert magnitude(X[1]) < 1e-35
    assert abs(float(X[0].real) - 6.7201e-3) < 1e-7


def test_x_routes_agree_at_p0(e_pe):
    A, B = inv.x_routes(e_pe)
    assert max(magnitude(x - y) for x, y in zip(A, B)) < 1e-30


def test_x_needs_dimension_five():
    s, entry, p = surface("sphere", n=3)
    ctx = context_build(s, (0, 0, 0, 1), MP)
    with pytest.raises(WrongDimension):
        inv.x_general(ctx)
    with pytest.raises(WrongDimension):
        inv.i_prime_at(ctx)


@settings(max_examples=9, deadline=None)
@given(st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]), st.integers(0, 10**6))
def test_x_route_agreement_on_ellipsoids(a, seed):
    s, entry, p = surface("ellipsoid-rev", a=a)
    ctx = context_build(s, entry.random_point(p, random.Random(seed), MP), MP)
    A, B = inv.x_routes(inv.pe_scale(ctx))
    scale = max(magnitude(x) for x in A)
    assert max(magnitude(x - y) for x, y in zip(A, B)) < 1e-7 * max(scale, 1e-30)


# -- I' and div X ------------------------------------------------------------------

def test_i_prime_sphere_and_tube(sphere_ctx, tube_ctx):
    assert magnitude(inv.i_prime(inv.pe_scale(sphere_ctx))) < 1e-35
    # tube: R |S|^2 / 12 with R = 2, |S|^2 = 2/3 and parallel S
    assert close(inv.i_prime_at(tube_ctx), Fraction(1, 9), 1e-25)
    assert close(inv.i_prime_at(tube_ctx), 2 * tube_norm_s2(2) / 12, 1e-25)


def test_i_prime_on_ellipsoid_is_real(e_pe):
    v = inv.i_prime(e_pe)
    assert abs(v.imag) < 1e-9 and v.real != 0


def test_div_x_sphere_and_tube(sphere_ctx, tube_ctx):
    assert abs(inv.div_x(inv.pe_scale(sphere_ctx))) < 1e-35
    assert abs(inv.div_x_at(tube_ctx)) < 1e-30


def test_div_x_on_equator_of_ellipsoid():
    s, _, _ = surface("ellipsoid-rev", a=HALF)
    # rho_w vanishes at w = 0, so z1 plays the role of w
    ctx = context_build(s.with_w_index(1), ellipsoid_rev_point(HALF, s=0, backend=MP), MP)
    # -(3/8) a^4 (1 + a^2) at a = 1/2
    assert close(inv.div_x(inv.pe_scale(ctx)), Fraction(-45, 1536), 1e-25)


@pytest.mark.parametrize("c", [Fraction(1, 3), Fraction(3)])
def test_canonical_scale_ignores_constant_rescaling(e_half, p0, c):
    base = inv.dim_five(context_build(e_half, p0, MP))
    other = inv.dim_five(context_build(scaled(e_half, c), p0, MP))
    for x, y in [(base.normS2, other.normS2), (base.Iprime, other.Iprime), (base.divX, other.divX),
                 *zip(base.X, other.X)]:
        assert magnitude(x - y) <= 1e-8 * max(magnitude(x), 1e-30)


# -- the conformal transformation law ------------------------------------------------

def test_conformal_law_trivial_factors(e_ctx):
    assert inv.conformal_law_check(e_ctx, constant(1, 3)) < 1e-35
    assert inv.conformal_law_check(e_ctx, constant(Fraction(7, 3), 3)) < 1e-9


def test_conformal_law_pins_sublaplacian_sign(e_ctx):
    f = from_text("1 + (1/20)*(z1 + conj(z1))", 3)
    assert inv.conformal_law_check(e_ctx, f, "positive-sum") < 1e-7
    assert inv.conformal_law_check(e_ctx, f, "negative-sum") > 1e-5
    assert inv.conformal_law_check(e_ctx, f) < 1e-7  # the package default


def test_conformal_law_rejects_nonpositive_factor(e_ctx):
    with pytest.raises(NotPositiveFactor):
        inv.conformal_law_check(e_ctx, constant(-1, 3))


# -- tube powers of S -------------------------------------------------------------------

@pytest.mark.parametrize("n,k,want", [(2, 1, (Fraction(-1, 2), Fraction(1, 6))),
                                      (2, 2, (Fraction(1, 6), Fraction(1, 18))),
                                      (3, 1, (Fraction(-1, 2), Fraction(1, 8)))])
def test_ck_dk(n, k, want):
    assert inv.ck_dk(n, k) == want


@pytest.mark.parametrize("k", [1, 2, 3])
def test_tube_power_fit(tube_ctx, k):
    resid, c, d = inv.tube_power_check(tube_ctx, k)
    ck, dk = inv.ck_dk(2, k)
    assert resid < 1e-12
    assert abs(c - float(ck)) < 1e-12 and abs(d - float(dk)) < 1e-12


def test_sign_of_top_power_alternates():
    for n, sign in ((2, -1), (3, 1)):
        s, entry, p = surface("tube", n=n)
        ctx = context_build(s, entry.sample_point(p, MP), MP)
        v = cmw_power_scalar(ph.curvature_general(ctx).S4, n + 1, ctx)
        assert close(v, tube_s_power(n), 1e-25)
        assert (v.real > 0) == (sign > 0)


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10**6))
def test_tube_parallel_invariants_at_random_points(seed):
    s, entry, p = surface("tube", n=2)
    ctx = context_build(s, entry.random_point(p, random.Random(seed), MP), MP)
    assert max(magnitude(x) for x in inv.x_general(ctx)) < 1e-25
    assert close(inv.i_prime_at(ctx), Fraction(1, 9), 1e-20)
