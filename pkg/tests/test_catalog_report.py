"""Catalog surfaces, point literals and placement, invariant reports."""
import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crweyl import verify
from crweyl.backend import QQi, get_backend, magnitude
from crweyl.catalog import (CATALOG, build_surface, parse_complex, parse_number, parse_point,
                            parse_surface_spec, point_place)
from crweyl.errors import BackendError, NoConvergence, UnknownSurface
from crweyl.report import InvariantReport, canonical_show, compute_report, decode, encode

from .conftest import close
from .golden.regen import snapshot

MP = get_backend("float", 128)
EXACT = get_backend("exact")
GOLDEN = Path(__file__).parent / "golden"


# -- literals -------------------------------------------------------------------

@pytest.mark.parametrize("text,want", [("3", Fraction(3)), (" -1/2 ", Fraction(-1, 2)), ("0.25", Fraction(1, 4))])
def test_parse_number(text, want):
    assert parse_number(text) == want


@pytest.mark.parametrize("text", ["x", "1/0", ""])
def test_parse_number_rejects(text):
    with pytest.raises(ValueError):
        parse_number(text)


def test_exact_point_literals():
    assert parse_point("1/2+1/3i, -i, 2", EXACT) == (QQi(Fraction(1, 2), Fraction(1, 3)), QQi(0, -1), QQi(2))
    assert parse_complex("sqrt(9/4)", EXACT) == QQi(Fraction(3, 2))


def test_irrational_literal_needs_float_backend():
    with pytest.raises(BackendError):
        parse_complex("sqrt(2)", EXACT)
    assert close(parse_complex("sqrt(2)", MP) ** 2, 2, 1e-36)


@pytest.mark.parametrize("text", ["1 +", "foo(1)", "2**3"])
def test_bad_point_literal(text):
    with pytest.raises(ValueError):
        parse_complex(text, MP)


# -- surface specs ----------------------------------------------------------------

def test_surface_spec_defaults_and_overrides():
    entry, params = parse_surface_spec("ellipsoid-rev:a=1/3")
    assert entry is CATALOG["ellipsoid-rev"] and params["a"] == Fraction(1, 3)
    _, params = parse_surface_spec("sphere")
    assert params == dict(CATALOG["sphere"].defaults)


def test_unknown_surface():
    with pytest.raises(UnknownSurface):
        parse_surface_spec("torus:r=1")


def test_malformed_surface_parameter():
    with pytest.raises(ValueError):
        parse_surface_spec("sphere:n")


def test_every_entry_builds_with_defaults():
    for name, entry in CATALOG.items():
        s = entry.build(dict(entry.defaults))
        assert s.N == len(entry.sample_point(dict(entry.defaults), MP)), name


def test_catalog_facts_hold():
    rows = verify.catalog_facts(MP)
    assert rows
    bad = [(r[0], r[1], r[4]) for r in rows if not r[5]]
    assert not bad


# -- placement ------------------------------------------------------------------

def test_radial_placement_on_sphere():
    s, _, _ = build_surface("sphere:n=2")
    p = point_place(s, parse_point("0, 0, 2", MP), "radial", MP)
    assert all(close(x, y, 1e-35) for x, y in zip(p, (0, 0, 1)))


def test_w_ray_placement_on_ellipsoid():
    s, _, _ = build_surface("ellipsoid-rev:a=1/2")
    p = point_place(s, parse_point("sqrt(1/2), 0, 2i", MP), "w", MP)
    assert close(p[2], QQi(0, 1), 1e-35)
    assert close(p[0], parse_complex("sqrt(1/2)", MP), 1e-35)


def test_ray_missing_the_surface():
    s, _, _ = build_surface("ellipsoid-rev:a=1/2")
    with pytest.raises(NoConvergence):
        point_place(s, parse_point("3, 0, 0", MP), [QQi(0), QQi(1), QQi(0)], MP)


def test_exact_placement_only_accepts_points_on_the_surface():
    s, _, _ = build_surface("sphere:n=2")
    on = parse_point("3/5, 0, 4/5i", EXACT)
    assert point_place(s, on, "radial", EXACT) == on
    with pytest.raises(BackendError):
        point_place(s, parse_point("3, 0, 0", EXACT), "radial", EXACT)


@settings(max_examples=20, deadline=None)
@given(st.fractions(min_value=Fraction(1, 10), max_value=3, max_denominator=20),
       st.fractions(min_value=-2, max_value=2, max_denominator=20))
def test_radial_placement_lands_on_sphere(x, y):
    s, _, _ = build_surface("sphere:n=2")
    p = point_place(s, (QQi(x), QQi(0, y), QQi(Fraction(1, 2))), "radial", MP)
    assert magnitude(sum(c * c.conjugate() for c in p) - 1) < 1e-30


# -- reports --------------------------------------------------------------------

def test_canonical_show_aliases():
    assert canonical_show(["normS2", "Iprime", "norm_s2", "xnorm", "", "R"]) == ["norm_s2", "i_prime", "x_norm", "rscal"]
    with pytest.raises(ValueError):
        canonical_show(["curvature"])


@pytest.mark.parametrize("x", [QQi(Fraction(-2, 9), Fraction(1, 3)), Fraction(5, 7), 3])
def test_encode_decode_exact(x):
    got = decode(encode(x))
    assert got == (x if type(x) is QQi else QQi(Fraction(x)))


def test_encode_decode_keeps_every_digit():
    x = parse_complex("sqrt(1/3) + sqrt(2)*i", MP)
    assert decode(encode(x), MP) == x


def test_report_json_round_trip(e_half, p0):
    rep = compute_report(e_half, p0, MP)
    back = InvariantReport.from_json(rep.to_json())
    assert back.values.keys() == rep.values.keys()
    assert all(back.values[k] == rep.values[k] for k in rep.values)
    assert back.surface == json.loads(rep.to_json())["surface"]
    assert rep.notes["scale"] == "volume-normalized"


def test_report_skips_dimension_five_quantities_when_n_is_3():
    s, entry, p = build_surface("sphere:n=3")
    rep = compute_report(s, entry.sample_point(p, MP), MP, show=["norm_s2", "X", "i_prime"])
    assert "dimension_five" in rep.notes
    assert set(rep.values) == {"norm_s2"}


def test_report_scale_choice(tube2, tube_ctx, e_half, p0):
    tube = compute_report(tube2, tube_ctx.coords, MP, show=["i_prime"])
    assert tube.notes["scale"] == "theta" and close(tube.values["i_prime"], Fraction(1, 9), 1e-25)
    forced = compute_report(e_half, p0, MP, show=["X"], scale="theta")
    assert forced.notes["scale"] == "theta"


def test_exact_report_values_stay_rational(exact):
    s, _, _ = build_surface("sphere:n=2")
    rep = compute_report(s, parse_point("3/5, 0, 4/5i", exact), exact, show=["h", "rscal", "norm_s2"])
    assert all(type(v) is QQi for v in rep.values.values())
    assert rep.values["norm_s2"] == 0


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_report_matches_snapshot(name):
    want = json.loads((GOLDEN / f"{name}.json").read_text())
    got = snapshot(name, MP)
    assert got["notes"] == want["notes"]
    assert got["values"].keys() == want["values"].keys()
    for k, v in want["values"].items():
        a, b = decode(got["values"][k], MP), decode(v, MP)
        assert magnitude(a - b) <= 1e-25 * max(1.0, magnitude(b)), k
