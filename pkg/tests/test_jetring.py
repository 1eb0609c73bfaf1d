"""Polynomials, scalar-field DAGs and truncated jets."""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crweyl import field as F
from crweyl.backend import QQi, get_backend, magnitude
from crweyl.catalog import parse_point
from crweyl.errors import EvalSingular, ParseError, VarOutOfRange
from crweyl.jet import field_jet
from crweyl.polynomial import poly_parse, poly_print

SPHERE2 = "z1*conj(z1) + z2*conj(z2) - 1"
E_HALF = "z1*conj(z1)+z2*conj(z2)+z3*conj(z3)+(1/4)*(z3^2+conj(z3)^2)-1"


# -- parsing ------------------------------------------------------------------

def test_parse_sphere_polynomial():
    p = poly_parse(SPHERE2, 2)
    assert p.is_real()
    assert p.degree() == 2
    assert poly_print(p) == "(-1) + z1*conj(z1) + z2*conj(z2)"


def test_parse_ellipsoid_expands_real_part():
    p = poly_parse(E_HALF, 3)
    assert poly_print(p) == "(-1) + z1*conj(z1) + z2*conj(z2) + (1/4)*z3^2 + z3*conj(z3) + (1/4)*conj(z3)^2"


def test_print_parse_round_trip():
    p = poly_parse(E_HALF, 3)
    assert poly_parse(poly_print(p), 3).key() == p.key()


@pytest.mark.parametrize("text", ["z1*conj(z2", "z1 +", "2**z1", "z1*(1/2/2)"])
def test_parse_errors_carry_offset(text):
    with pytest.raises(ParseError) as info:
        poly_parse(text, 2)
    assert 0 <= info.value.offset <= len(text)


def test_unclosed_parenthesis_offset():
    with pytest.raises(ParseError) as info:
        poly_parse("z1*conj(z2", 2)
    assert info.value.offset == len("z1*conj(z2")


def test_variable_out_of_range():
    with pytest.raises((VarOutOfRange, ParseError)):
        poly_parse("z3", 2)


# -- differentiation ----------------------------------------------------------

def test_diff_of_hermitian_monomial():
    f = F.from_text("z1*conj(z1)", 2)
    assert F.field_diff(f, 0) is F.from_text("conj(z1)", 2)
    assert F.field_diff(f, 0, barred=True) is F.from_text("z1", 2)


def test_log_chain_rule(mp):
    g = F.from_text("z1^2 + 3*z1*conj(z1) + 1", 1)
    lhs = F.field_diff(F.log(g), 0)
    rhs = F.div(F.field_diff(g, 0), g)
    pt = parse_point("1/3+1/5i", mp)
    assert magnitude(F.field_eval(lhs, pt, mp) - F.field_eval(rhs, pt, mp)) < 1e-35


def test_powrat_rule(mp):
    g = F.from_text("2 + z1*conj(z1)", 1)
    q = Fraction(-1, 4)
    lhs = F.field_diff(F.powrat(g, q), 0, barred=True)
    rhs = F.mul(F.lift(q, 1), F.powrat(g, q - 1), F.field_diff(g, 0, barred=True))
    pt = parse_point("1/2-1/7i", mp)
    assert magnitude(F.field_eval(lhs, pt, mp) - F.field_eval(rhs, pt, mp)) < 1e-35


def test_fourth_w_derivative_of_ellipsoid_vanishes():
    d = F.from_text(E_HALF, 3)
    for barred in (False, True, False, True):
        d = F.field_diff(d, 2, barred)
    assert d is F.constant(0, 3)


# -- evaluation ---------------------------------------------------------------

def test_eval_sphere_on_surface(exact):
    f = F.from_text("z1*conj(z1)+z2*conj(z2)+z3*conj(z3)-1", 3)
    assert F.field_eval(f, (QQi(0), QQi(0), QQi(1)), exact) == 0


def test_eval_ellipsoid_at_p0(mp):
    f = F.from_text(E_HALF, 3)
    assert magnitude(F.field_eval(f, parse_point("sqrt(1/2),0,1i", mp), mp)) < 1e-36


def test_eval_ellipsoid_exact_rational_point(exact):
    # |z1|^2 + |w|^2 + Re(w^2)/2 = 1 at z1 = 3/5, w = 4/5 i: 9/25 + 16/25 - 8/25 = 17/25
    f = F.from_text(E_HALF, 3)
    assert F.field_eval(f, (QQi(Fraction(3, 5)), QQi(0), QQi(0, Fraction(4, 5))), exact) == QQi(Fraction(-8, 25))


def test_log_of_zero_is_singular(mp):
    with pytest.raises(EvalSingular):
        F.field_eval(F.log(F.from_text("z1", 1)), (0,), mp)


def test_field_is_real():
    assert F.field_is_real(F.from_text("z1*conj(z1) - 1", 2)) is True
    assert F.field_is_real(F.coordinate(0, 1)) is False
    assert F.field_is_real(F.from_text("z3^2 + conj(z3)^2", 3)) is True


def test_hash_consing_shares_nodes():
    a = F.mul(F.coordinate(0, 2), F.coordinate(1, 2, True))
    b = F.mul(F.coordinate(1, 2, True), F.coordinate(0, 2))
    assert a is b
    assert F.from_text("z1*conj(z2)", 2) is F.from_text("conj(z2)*z1", 2)


# -- jets ---------------------------------------------------------------------

def test_jet_derivatives_match_field_diff(mp):
    f = F.powrat(F.from_text("2 + z1*conj(z1) + z1*z2 + conj(z1*z2)", 2), Fraction(1, 3))
    pt = parse_point("1/3+1/4i, -1/5+1/2i", mp)
    jet = field_jet(f, pt, 4, mp)
    d = F.field_diff(F.field_diff(F.field_diff(f, 0), 1, True), 0, True)
    assert magnitude(jet.derivative((1, 0, 1, 1)) - F.field_eval(d, pt, mp)) < 1e-33


def test_jet_log_and_recip_are_inverse_operations(mp):
    f = F.from_text("3 + z1*conj(z1) + (1/2)*(z1^2 + conj(z1)^2)", 1)
    pt = parse_point("1/4+1/3i", mp)
    j = field_jet(f, pt, 5, mp)
    one = j * j.recip()
    assert magnitude(one.value - 1) < 1e-36
    assert max(magnitude(one.derivative((a, b))) for a in range(4) for b in range(4 - a) if a + b) < 1e-33
    lg = field_jet(F.log(f), pt, 5, mp)
    assert magnitude(lg.derivative((2, 1)) - j.log().derivative((2, 1))) < 1e-33


# -- properties ---------------------------------------------------------------

EXACT = get_backend("exact")
_coef = st.fractions(min_value=-3, max_value=3, max_denominator=5)
_mono = st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))
_poly_terms = st.lists(st.tuples(_coef, _mono), min_size=1, max_size=6)


def _poly_text(terms):
    parts = []
    for c, (a, b, c1, d) in terms:
        parts.append(f"({c.numerator}/{c.denominator})*z1^{a}*z2^{b}*conj(z1)^{c1}*conj(z2)^{d}")
    return " + ".join(parts)


def _point(draw_vals):
    return tuple(QQi(Fraction(x), Fraction(y)) for x, y in draw_vals)


_pt = st.lists(st.tuples(_coef, _coef), min_size=2, max_size=2).map(_point)
_slot = st.tuples(st.integers(0, 1), st.booleans())


@settings(max_examples=40, deadline=None)
@given(_poly_terms, _pt, _slot, _slot)
def test_mixed_partials_commute_exactly(terms, pt, s1, s2):
    f = F.from_text(_poly_text(terms), 2)
    d12 = F.field_diff(F.field_diff(f, *s1), *s2)
    d21 = F.field_diff(F.field_diff(f, *s2), *s1)
    assert F.field_eval(d12, pt, EXACT) == F.field_eval(d21, pt, EXACT)


@settings(max_examples=40, deadline=None)
@given(_poly_terms, _pt, _slot)
def test_conj_diff_commutation(terms, pt, slot):
    f = F.from_text(_poly_text(terms), 2)
    j, barred = slot
    lhs = F.field_eval(F.field_diff(F.conj(f), j, barred), pt, EXACT)
    rhs = F.field_eval(F.field_diff(f, j, not barred), pt, EXACT).conjugate()
    assert lhs == rhs


@settings(max_examples=30, deadline=None)
@given(_poly_terms, _pt)
def test_norm_square_is_real_nonnegative(terms, pt):
    f = F.from_text(_poly_text(terms), 2)
    x = F.field_eval(f, pt, EXACT)
    sq = x * x.conjugate()
    assert sq.im == 0 and sq.re >= 0
    assert x.conjugate().conjugate() == x


@settings(max_examples=25, deadline=None)
@given(_poly_terms, _pt)
def test_jet_agrees_with_exact_field_derivatives(terms, pt):
    f = F.from_text(_poly_text(terms), 2)
    jet = field_jet(f, pt, 3, EXACT)
    d = F.field_diff(F.field_diff(f, 0), 1, True)
    assert jet.derivative((1, 0, 0, 1)) == F.field_eval(d, pt, EXACT)


def test_numba_and_numpy_products_agree():
    from crweyl import _kernels
    native = get_backend("float", 53)
    f = F.powrat(F.from_text("2 + z1*conj(z1) + z1*z2 + conj(z1*z2)", 2), Fraction(1, 3))
    pt = (0.3 + 0.1j, -0.2 + 0.4j)
    runs = []
    for flag in (True, False):
        prev = _kernels.set_numba(flag)
        try:
            runs.append(field_jet(f, pt, 5, native).c.copy())
        finally:
            _kernels.set_numba(prev)
    assert max(abs(x - y) for x, y in zip(*runs)) < 1e-13
