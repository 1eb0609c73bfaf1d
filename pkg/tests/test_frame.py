"""Frame data at a point: Levi matrices, xi, r, J and the ambient inverse."""
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crweyl import frame as fr
from crweyl.backend import QQi, get_backend, magnitude
from crweyl.catalog import CATALOG
from crweyl.errors import FrameDegenerate, LeviDegenerate, OffSurface
from crweyl.field import constant
from crweyl.frame import Hypersurface, context_build

from .conftest import close, surface

MP = get_backend("float", 128)


def _mat_close(m, target, tol=1e-30):
    return all(close(m[i][j], target[i][j], tol) for i in range(len(target)) for j in range(len(target)))


def test_sphere_at_north_pole(sphere_ctx):
    c = sphere_ctx
    assert _mat_close(c.h, [[1, 0], [0, 1]])
    assert _mat_close(c.h_inv, [[1, 0], [0, 1]])
    assert [complex(x) for x in c.xi] == [0, 0, 1]
    assert close(c.r, 1) and close(c.J, 1) and close(c.d_rho2, 1)


def test_ellipsoid_at_p0(e_ctx):
    c = e_ctx
    assert _mat_close(c.h, [[3, 0], [0, 1]])
    assert _mat_close(c.h_inv, [[Fraction(1, 3), 0], [0, 1]])
    assert close(c.d_rho2, Fraction(3, 4)) and close(c.J, Fraction(3, 4))
    assert close(c.r, Fraction(4, 3))
    assert close(fr.ambient_inverse(c)[0][0], Fraction(1, 3))


def test_d_operators_on_ellipsoid(e_ctx, e_half):
    assert close(fr.d_mixed(e_ctx, e_half.rho, 0, 0), 3)
    assert close(fr.d_holo(e_ctx, e_half.rho, 0, 0), -1)
    assert magnitude(fr.d_holo(e_ctx, e_half.rho, 0, 1)) < 1e-35
    assert magnitude(fr.d_mixed(e_ctx, constant(7, 3), 0, 1)) == 0


def test_d_operators_on_sphere(sphere_ctx, sphere2):
    for a in range(2):
        for b in range(2):
            assert close(fr.d_mixed(sphere_ctx, sphere2.rho, a, b), int(a == b))
            assert magnitude(fr.d_holo(sphere_ctx, sphere2.rho, a, b)) < 1e-35


def test_two_routes_to_j(e_ctx):
    assert close(fr.bordered_hessian_det(e_ctx), e_ctx.J)


def test_off_surface_point_rejected(sphere2):
    with pytest.raises(OffSurface):
        context_build(sphere2, (0, 0, 0), MP)


def test_vanishing_rho_w_rejected(sphere2):
    with pytest.raises(FrameDegenerate) as info:
        context_build(sphere2, (1, 0, 0), MP)
    assert "w_index=1" in str(info.value)
    assert context_build(sphere2.with_w_index(1), (1, 0, 0), MP).J is not None


def test_levi_degenerate_rejected():
    flat = Hypersurface("(1/2)*(z2 + conj(z2))", 1, name="flat")
    with pytest.raises(LeviDegenerate):
        context_build(flat, (0, 0), MP)


def test_degenerate_hessian_uses_adjugate_path(exact):
    s, _, _ = surface("normal-form", seed=0)
    c = context_build(s, (QQi(0),) * 3, exact)
    assert list(c.xi) == [QQi(0), QQi(0), QQi(0, 2)]
    assert c.r == 0
    assert fr.xi_residual(c) == 0
    assert c.d_rho2 is None  # the Hessian of rho is singular at the origin


def test_fefferman_determinant_scaling(e_half, p0):
    c = context_build(e_half, p0, MP)
    c3 = context_build(fr.scaled(e_half, 3), p0, MP)
    assert close(c3.J / c.J, 81)
    assert _mat_close(c3.h, [[3 * x for x in row] for row in c.h])


@pytest.mark.parametrize("C", [Fraction(1, 2), Fraction(2)])
def test_squared_wrapper_leaves_frame_data(e_half, p0, C):
    c = context_build(e_half, p0, MP)
    cw = context_build(fr.squared_wrapper(e_half, C), p0, MP)
    assert _mat_close(cw.h, c.h)
    assert _mat_close(cw.h_inv, c.h_inv)
    assert _mat_close(cw.h_hol, c.h_hol)
    assert all(close(x, y) for x, y in zip(cw.xi, c.xi))


# -- properties at random points ---------------------------------------------

_SURFACES = [("sphere", {"n": 2}), ("ellipsoid-rev", {"a": Fraction(1, 3)}),
             ("ellipsoid-rev", {"a": Fraction(-1, 2)}), ("tube", {"n": 2}),
             ("pluriharmonic", {"seed": 3, "eps": Fraction(1, 10)})]


def _random_ctx(k, seed):
    name, params = _SURFACES[k]
    s, entry, p = surface(name, **params)
    return context_build(s, entry.random_point(p, random.Random(seed), MP), MP)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, len(_SURFACES) - 1), st.integers(0, 10**6))
def test_frame_invariants_at_random_points(k, seed):
    c = _random_ctx(k, seed)
    n = c.n
    h, hi, hh = c.h, c.h_inv, c.h_hol
    for a in range(n):
        for b in range(n):
            assert magnitude(h[a][b] - h[b][a].conjugate()) < 1e-30
            assert magnitude(hh[a][b] - hh[b][a]) < 1e-30
            prod = sum(h[a][m] * hi[m][b] for m in range(n))
            assert magnitude(prod - int(a == b)) < 1e-10
    assert fr.xi_residual(c) < 1e-10
    for x in (c.r, c.J):
        assert abs(x.imag) < 1e-10
    greek = fr.FrameContext.greek_block(c, c.h_amb)
    assert all(close(greek[i][j], hi[i][j], 1e-20) for i in range(n) for j in range(n))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, len(_SURFACES) - 1), st.integers(0, 10**6),
       st.sampled_from([Fraction(1, 3), Fraction(2), Fraction(5, 2)]))
def test_constant_rescaling(k, seed, c_):
    c = _random_ctx(k, seed)
    cs = context_build(fr.scaled(c.surface, c_), c.coords, MP)
    assert close(cs.J, c.J * c_ ** (c.n + 2), 1e-25)
    assert all(close(cs.h[a][b], c_ * c.h[a][b], 1e-25) for a in range(c.n) for b in range(c.n))


def test_catalog_sample_points_build():
    for name, entry in CATALOG.items():
        s = entry.build(dict(entry.defaults))
        c = context_build(s, entry.sample_point(dict(entry.defaults), MP), MP)
        assert fr.xi_residual(c) < 1e-10, name
