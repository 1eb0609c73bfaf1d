import gmpy2
import pytest
from fractions import Fraction

from crweyl.backend import QQi, get_backend, magnitude
from crweyl.catalog import CATALOG, parse_point
from crweyl.frame import context_build


@pytest.fixture(scope="session")
def mp():
    b = get_backend("float", 128)
    b.activate()
    return b


@pytest.fixture(scope="session")
def exact():
    return get_backend("exact")


def surface(name, **params):
    entry = CATALOG[name]
    p = dict(entry.defaults)
    p.update({k: Fraction(v) for k, v in params.items()})
    return entry.build(p), entry, p


@pytest.fixture(scope="session")
def sphere2():
    return surface("sphere", n=2)[0]


@pytest.fixture(scope="session")
def e_half():
    return surface("ellipsoid-rev", a=Fraction(1, 2))[0]


@pytest.fixture(scope="session")
def tube2():
    return surface("tube", n=2)[0]


@pytest.fixture(scope="session")
def p0(mp):
    """(1/sqrt 2, 0, i) on E(1/2)."""
    return parse_point("sqrt(1/2), 0, 1i", mp)


@pytest.fixture(scope="session")
def e_ctx(e_half, p0, mp):
    return context_build(e_half, p0, mp)


@pytest.fixture(scope="session")
def sphere_ctx(sphere2, mp):
    return context_build(sphere2, (0, 0, 1), mp)


@pytest.fixture(scope="session")
def tube_ctx(tube2, mp):
    entry = CATALOG["tube"]
    return context_build(tube2, entry.sample_point(entry.defaults, mp), mp)


def close(a, b, tol=1e-25):
    if type(b) is QQi and type(a) is not QQi:
        b = get_backend("float", 128).coerce(b)
    return magnitude(a - b) <= tol * max(1.0, magnitude(b))


def qq(x):
    return QQi(Fraction(x))


def mpf(text):
    return gmpy2.mpfr(text)
