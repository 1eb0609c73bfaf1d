"""Built-in surfaces, sample points and point placement.

Surfaces are named ``NAME:key=value,...``; values are rationals (``1/2``)
or decimals, read exactly.  Each entry knows a sample point and a list of
facts that :mod:`crweyl.verify` checks there.
"""
import ast
import itertools
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import gmpy2
import numpy as np

from .backend import QQi, get_backend, magnitude, re_part
from .errors import BackendError, CRWeylError, NoConvergence, UnknownSurface
from .field import field_eval, polynomial
from .frame import Hypersurface
from .jet import JetEvaluator
from .polynomial import CPolynomial
from .tensor import webster_tracefree

NEWTON_MAX_ITER = 50


# ---------------------------------------------------------------------------
# number and point literals


def parse_number(text):
    """A rational parameter value: ``3``, ``-1/2``, ``0.25``."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc


_IMAG = re.compile(r"(\d+(?:\.\d*)?(?:/\d+)?)\s*i\b")


class _PointEval:
    """Tiny evaluator for point literals such as ``1/2+1/3i`` or ``sqrt(1/2)``.

    Values stay exact (:class:`QQi`) until a square root forces the float
    backend.
    """

    def __init__(self, text, backend):
        self.text = text
        self.backend = backend

    def run(self):
        src = _IMAG.sub(r"(\1)*I", self.text.strip())
        src = re.sub(r"\)\s*i\b", ")*I", src)  # (p/q)i, as written by scan templates
        src = re.sub(r"(?<![\w.])i\b", "I", src)
        try:
            tree = ast.parse(src, mode="eval")
        except SyntaxError as exc:
            raise ValueError(f"bad complex literal {self.text!r}") from exc
        self.src = src
        return self.node(tree.body)

    def promote(self, x):
        return self.backend.coerce(x) if type(x) is QQi else x

    def binop(self, op, a, b):
        if type(a) is not type(b):
            a, b = self.promote(a), self.promote(b)
        if isinstance(op, ast.Add):
            return a + b
        if isinstance(op, ast.Sub):
            return a - b
        if isinstance(op, ast.Mult):
            return a * b
        if isinstance(op, ast.Div):
            return a / b
        raise ValueError(f"operator not allowed in {self.text!r}")

    def node(self, t):
        if isinstance(t, ast.Constant) and isinstance(t.value, (int, float)):
            return QQi(Fraction(ast.get_source_segment(self.src, t)))
        if isinstance(t, ast.Name) and t.id == "I":
            return QQi(0, 1)
        if isinstance(t, ast.UnaryOp) and isinstance(t.op, (ast.USub, ast.UAdd)):
            v = self.node(t.operand)
            return -v if isinstance(t.op, ast.USub) else v
        if isinstance(t, ast.BinOp):
            return self.binop(t.op, self.node(t.left), self.node(t.right))
        if isinstance(t, ast.Call) and isinstance(t.func, ast.Name) and t.func.id == "sqrt" and len(t.args) == 1:
            v = self.node(t.args[0])
            if type(v) is QQi and v.im == 0 and v.re >= 0:
                p, q = v.re.numerator, v.re.denominator
                if gmpy2.is_square(p) and gmpy2.is_square(q):
                    return QQi(Fraction(int(gmpy2.isqrt(p)), int(gmpy2.isqrt(q))))
            if self.backend.exact:
                raise BackendError("irrational point coordinate under the exact backend")
            return self.backend.coerce(self.backend.sqrt_real(self.promote(v)))
        raise ValueError(f"unsupported syntax in point literal {self.text!r}")


def parse_complex(text, backend=None):
    """Parse one coordinate literal."""
    backend = get_backend() if backend is None else get_backend(backend)
    backend.activate()
    value = _PointEval(text, backend).run()
    return value if backend.exact else backend.coerce(value)


def parse_point(text, backend=None):
    """Comma-separated coordinates, e.g. ``"sqrt(1/2), 0, 1i"``."""
    return tuple(parse_complex(part, backend) for part in text.split(","))


# ---------------------------------------------------------------------------
# point placement


def _ray(surface, seed, direction):
    N, w = surface.N, surface.w
    zero = QQi(0)
    if isinstance(direction, str):
        if direction == "radial":
            return [zero] * N, list(seed), 1
        if direction == "w":
            base = list(seed)
            base[w] = zero
            d = [zero] * N
            d[w] = seed[w]
            return base, d, 1
        if direction == "z":
            base = [zero] * N
            base[w] = seed[w]
            d = list(seed)
            d[w] = zero
            return base, d, 1
        raise ValueError(f"unknown ray {direction!r}; use radial, w, z or a vector")
    return list(seed), list(direction), 0


def point_place(surface, seed, direction="radial", backend=None, max_iter=NEWTON_MAX_ITER):
    """Move ``seed`` onto ``{rho = 0}`` along a real ray by Newton's method.

    Parameters
    ----------
    direction : {"radial", "w", "z"} or sequence
        ``radial`` scales the whole seed, ``w`` only the distinguished
        coordinate, ``z`` the others; a vector ``d`` moves along
        ``seed + t d``.

    Returns
    -------
    tuple
        Coordinates on the surface (backend scalars).

    Raises
    ------
    NoConvergence
    """
    backend = get_backend() if backend is None else get_backend(backend)
    backend.activate()
    rho = surface.rho
    if backend.exact:
        if field_eval(rho, seed, backend) == 0:
            return tuple(backend.coerce(c) for c in seed)
        raise BackendError("point placement needs a float backend unless the seed lies on M")
    base, d, t = _ray(surface, [backend.coerce(c) for c in seed], direction)
    base = [backend.coerce(c) for c in base]
    d = [backend.coerce(c) for c in d]
    t = backend.coerce(t).real
    eps = 2.0 ** (-backend.precision + 8)
    N = surface.N
    for _ in range(max_iter):
        p = [b + t * v for b, v in zip(base, d)]
        jet = JetEvaluator(p, 1, backend).jet(rho)
        g = re_part(jet.value)
        scale = max(1.0, sum(magnitude(c) ** 2 for c in p))
        if abs(g) <= eps * scale:
            return tuple(p)
        dg = 0
        for j in range(N):
            e = [0] * (2 * N)
            e[j] = 1
            dg = dg + jet.derivative(e) * d[j]
        dg = 2 * re_part(dg)
        if not dg:
            break
        t = t - g / dg
        if abs(t) > 1e8:
            break
    raise NoConvergence(f"Newton along the ray did not reach rho = 0 within {max_iter} steps")


# ---------------------------------------------------------------------------
# catalog entries


@dataclass
class KnownFact:
    """``check(ctx) -> (computed, expected)`` compared at ``tol``."""

    name: str
    check: Callable
    tol: float = 1e-9
    relative: bool = False
    min_order: int = 4


@dataclass
class CatalogEntry:
    name: str
    defaults: dict
    build: Callable
    sample_point: Callable
    facts: Callable
    random_point: Callable = None
    doc: str = ""
    params: dict = field(default_factory=dict)


def _coords(N):
    z = [CPolynomial.coordinate(j, N) for j in range(N)]
    zb = [CPolynomial.coordinate(j, N, True) for j in range(N)]
    return z, zb


def _const(c, N):
    return CPolynomial.constant(QQi(c) if not isinstance(c, QQi) else c, N)


def _sqrt_q(q, backend):
    q = Fraction(q)
    if q >= 0 and gmpy2.is_square(q.numerator) and gmpy2.is_square(q.denominator):
        return QQi(Fraction(int(gmpy2.isqrt(q.numerator)), int(gmpy2.isqrt(q.denominator))))
    if backend.exact:
        raise BackendError(f"sqrt({q}) is irrational; use a float backend")
    backend.activate()
    return backend.coerce(gmpy2.sqrt(gmpy2.mpq(q.numerator, q.denominator)))


def _radial_random(surface, rng, backend, tries=20):
    from .frame import context_build
    for _ in range(tries):
        seed = [complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(surface.N)]
        try:
            p = point_place(surface, seed, "radial", backend)
            context_build(surface, p, backend)
            return p
        except CRWeylError:
            continue
    raise NoConvergence("could not draw a valid random point")


# -- sphere ------------------------------------------------------------------


def sphere_rho(n):
    N = n + 1
    z, zb = _coords(N)
    p = _const(-1, N)
    for j in range(N):
        p = p + z[j] * zb[j]
    return polynomial(p)


def _sphere_facts(p):
    from . import pseudohermitian as ph
    n = int(p["n"])
    return [
        KnownFact("S_vanishes", lambda ctx: (ph.curvature_general(ctx).S4.max_abs(), 0), 1e-10),
        KnownFact("rscal", lambda ctx: (ph.curvature_general(ctx).Rscal, n * (n + 1)), 1e-10),
        KnownFact("gauss", lambda ctx: (max(ph.gauss_check(ctx)), 0), 1e-9),
    ]


# -- ellipsoids of revolution E(a) -------------------------------------------


def ellipsoid_rev_rho(a, n=2):
    """``||z||^2 + |w|^2 + Re(a w^2) - 1``."""
    N = n + 1
    z, zb = _coords(N)
    p = _const(-1, N)
    for j in range(N):
        p = p + z[j] * zb[j]
    w, wb = z[n], zb[n]
    p = p + _const(Fraction(a) / 2, N) * (w * w + wb * wb)
    return polynomial(p)


def ellipsoid_rev_point(a, n=2, s=None, backend=None):
    """Point ``(1/sqrt2, 0, .., i t)`` of E(a); ``||z||^2 = 1/2`` unless ``s`` fixes ``w = i s``."""
    backend = get_backend() if backend is None else get_backend(backend)
    a = Fraction(a)
    if s is None:
        if a >= 1:
            raise ValueError("the w = i s family needs a < 1")
        t = _sqrt_q(Fraction(1, 2) / (1 - a), backend)
        z1 = _sqrt_q(Fraction(1, 2), backend)
    else:
        s = Fraction(s)
        rest = 1 - s * s * (1 - a)
        if rest < 0:
            raise NoConvergence(f"w = {s}i is not on E({a})")
        t = QQi(s)
        z1 = _sqrt_q(rest, backend)
    zero = QQi(0)
    t = t if type(t) is QQi else backend.coerce(t)
    w = QQi(0, t.re) if type(t) is QQi else t * backend.coerce(1j)
    return (z1,) + (zero,) * (n - 1) + (w,)


def e_norm_s2(a, z, w, n=2):
    """Closed form ``n(n-1)/((n+1)(n+2)) a^4 ||z||^8 / |d rho|^12`` on E(a)."""
    nz = sum(abs(x) ** 2 for x in z)
    rw = w.conjugate() + a * w
    d = nz + abs(rw) ** 2
    return gmpy2.mpq(n * (n - 1), (n + 1) * (n + 2)) * a ** 4 * nz ** 4 / d ** 6


def e_x_tilde(a, z, w, coefficient=gmpy2.mpq(1, 24), weight=9, tail=9):
    """``coefficient * a^4 ||z||^6 zbar_a (weight |d rho|^2 + tail a ||z||^2 rho_wbar/rho_w) / |d rho|^13``.

    The defaults ``(1/24, 9, 9)`` reproduce X from both independent routes
    (direct computation and the conformal law); criterion 5 checks the
    weight-1 variant at its stated tolerance (see README).
    """
    nz = sum(abs(x) ** 2 for x in z)
    rw = w.conjugate() + a * w
    rwb = w + a * w.conjugate()
    d = nz + abs(rw) ** 2
    f = coefficient * a ** 4 * nz ** 3 * (weight * d + tail * a * nz * rwb / rw) / d ** 6 / gmpy2.sqrt(d)
    return [f * x.conjugate() for x in z]


def _e_split(ctx):
    c = ctx.coords
    return list(c[: ctx.n]), c[ctx.n]


def _ellipsoid_rev_facts(p):
    from . import invariants as inv
    from . import pseudohermitian as ph
    a = p["a"]
    n = int(p.get("n", 2))
    A = gmpy2.mpq(a.numerator, a.denominator)

    def norm(ctx):
        z, w = _e_split(ctx)
        return ph.geometry(ctx).S_norm2.value, e_norm_s2(A, z, w, n)

    def x_form(ctx):
        z, w = _e_split(ctx)
        X = inv.x_alpha(inv.pe_scale(ctx))
        ref = e_x_tilde(A, z, w, weight=9)
        return max(magnitude(x - y) for x, y in zip(X, ref)), 0

    facts = [
        KnownFact("norm_s2_closed_form", norm, 1e-9, relative=True),
        KnownFact("torsion_routes", lambda ctx: ((ph.torsion(ctx) - ph.torsion_liluk(ctx)).max_abs(), 0), 1e-9),
        KnownFact("gauss", lambda ctx: (max(ph.gauss_check(ctx)), 0), 1e-9),
    ]
    if n == 2 and a < 1:
        facts.append(KnownFact("x_tilde_recomputed_closed_form", x_form, 1e-8, min_order=6))
    return facts


def _ellipsoid_rev_random(p, rng, backend):
    a = p["a"]
    n = int(p.get("n", 2))
    surface = Hypersurface(ellipsoid_rev_rho(a, n), n, name="ellipsoid-rev")
    return _radial_random(surface, rng, backend)


# -- diagonal ellipsoids -----------------------------------------------------


def ellipsoid_rho(n, a, b):
    """``sum_j b_j |z_j|^2 + Re(a_j z_j^2) - 1``."""
    N = n + 1
    z, zb = _coords(N)
    p = _const(-1, N)
    for j in range(N):
        p = p + _const(b[j], N) * z[j] * zb[j] + _const(Fraction(a[j]) / 2, N) * (z[j] * z[j] + zb[j] * zb[j])
    return polynomial(p)


def _ellipsoid_ab(p):
    n = int(p.get("n", 2))
    a = [p.get(f"a{j + 1}", Fraction(0)) for j in range(n + 1)]
    b = [p.get(f"b{j + 1}", Fraction(1)) for j in range(n + 1)]
    return n, a, b


def _ellipsoid_facts(p):
    from . import pseudohermitian as ph
    n, a, b = _ellipsoid_ab(p)
    facts = [KnownFact("gauss", lambda ctx: (max(ph.gauss_check(ctx)), 0), 1e-9)]
    if all(bj > abs(aj) for aj, bj in zip(a, b)):
        facts.append(KnownFact("torsion_routes",
                               lambda ctx: ((ph.torsion(ctx) - ph.torsion_liluk(ctx)).max_abs(), 0), 1e-9))
    if all(bj == 1 for bj in b):
        facts.append(KnownFact("unit_hessian_route", lambda ctx: (
            (ph.curvature_unit_hessian(ctx).S4 - ph.curvature_general(ctx).S4).max_abs(), 0), 1e-9))
    return facts


# -- tube over the sphere ----------------------------------------------------


def tube_rho(n):
    """``sum |z_j|^2 + Re(z_j^2) - 1``, i.e. ``2 ||Re z||^2 = 1``."""
    N = n + 1
    z, zb = _coords(N)
    p = _const(-1, N)
    for j in range(N):
        p = p + z[j] * zb[j] + _const(Fraction(1, 2), N) * (z[j] * z[j] + zb[j] * zb[j])
    return polynomial(p)


def tube_point(n):
    """A rational point: ``Re z = (1/2, 0, .., 0, 1/2)`` with assorted imaginary parts."""
    N = n + 1
    pts = [QQi(0, Fraction(1, j + 3)) for j in range(N)]
    pts[0] = QQi(Fraction(1, 2), Fraction(1, 3))
    pts[-1] = QQi(Fraction(1, 2), Fraction(-1, 4))
    return tuple(pts)


def tube_norm_s2(n):
    """``|S|^2`` of the tube: ``n(n-1)(n+2)/(4(n+1))``."""
    return Fraction(n * (n - 1) * (n + 2), 4 * (n + 1))


def tube_s_power(n):
    """``S^{n+1}``: the spectrum of S on symmetric pairs gives ``l1^{n+1} + (m-1)/(n+1)^{n+1}``."""
    l1 = Fraction(1, n + 1) - Fraction(n, 2)
    m = n * (n + 1) // 2
    return l1 ** (n + 1) + (m - 1) * Fraction(1, n + 1) ** (n + 1)


def _tube_facts(p):
    from . import invariants as inv
    from . import pseudohermitian as ph
    from .tensor import cmw_norm
    n = int(p["n"])

    def ric(ctx):
        P = ph.curvature_general(ctx)
        h = ctx.h
        return max(magnitude(P.Ric.data[i, j] - Fraction(n, 2) * h[i][j]) for i in range(n) for j in range(n)), 0

    def nabla(ctx):
        geo = ph.geometry(ph.require_order(ctx, 5))
        return max(geo.covd(geo.S_field, d).max_abs() for d in ("hol", "anti", "T")), 0

    facts = [
        KnownFact("rscal", lambda ctx: (ph.curvature_general(ctx).Rscal, Fraction(n * n, 2)), 1e-10),
        KnownFact("ricci", ric, 1e-10),
        KnownFact("norm_s2", lambda ctx: (cmw_norm(ph.curvature_general(ctx).S4, ctx), tube_norm_s2(n)), 1e-10),
        KnownFact("nabla_S", nabla, 1e-9, min_order=5),
    ]
    if n == 2:
        facts.append(KnownFact("X_vanishes", lambda ctx: (max(magnitude(x) for x in inv.x_general(ctx)), 0),
                               1e-9, min_order=5))
        facts.append(KnownFact("i_prime", lambda ctx: (inv.i_prime_at(ctx), Fraction(1, 9)), 1e-9, min_order=6))
    return facts


def _tube_random(p, rng, backend):
    n = int(p["n"])
    surface = Hypersurface(tube_rho(n), n, name="tube")
    return _radial_random(surface, rng, backend)


# -- pluriharmonic perturbations of the sphere -------------------------------


def pluriharmonic_psi(n, seed, degrees=(3, 4)):
    """Random holomorphic polynomial with small rational coefficients."""
    rng = random.Random(int(seed))
    N = n + 1
    z, _ = _coords(N)
    psi = _const(0, N)
    for deg in degrees:
        for mono in itertools.combinations_with_replacement(range(N), deg):
            c = QQi(Fraction(rng.randint(-5, 5), 7), Fraction(rng.randint(-5, 5), 7))
            if not c:
                continue
            t = _const(c, N)
            for j in mono:
                t = t * z[j]
            psi = psi + t
    return psi


def pluriharmonic_rho(n, seed, eps):
    """``||Z||^2 - 1 + eps Re psi``."""
    N = n + 1
    psi = pluriharmonic_psi(n, seed)
    half = _const(Fraction(eps) / 2, N)
    z, zb = _coords(N)
    p = _const(-1, N)
    for j in range(N):
        p = p + z[j] * zb[j]
    return polynomial(p + half * (psi + psi.conj()))


def _pluri_facts(p):
    from . import pseudohermitian as ph
    return [
        KnownFact("unit_hessian_route", lambda ctx: (
            (ph.curvature_unit_hessian(ctx).S4 - ph.curvature_general(ctx).S4).max_abs(), 0), 1e-9),
        KnownFact("curly_R_vanishes", lambda ctx: (ph.curly_R(ctx).max_abs(), 0), 1e-12),
        KnownFact("gauss", lambda ctx: (max(ph.gauss_check(ctx)), 0), 1e-9),
    ]


def _pluri_surface(p):
    n = int(p.get("n", 2))
    return Hypersurface(pluriharmonic_rho(n, p["seed"], p["eps"]), n, name="pluriharmonic")


def _pluri_random(p, rng, backend):
    return _radial_random(_pluri_surface(p), rng, backend)


# -- normal-form quartic -----------------------------------------------------


def random_tracefree_quartic(seed, n=2):
    """Random rational ``c_{a bbar c dbar}``: symmetric, Hermitian and tracefree."""
    rng = random.Random(int(seed))
    idx = list(itertools.product(range(n), repeat=4))
    M = {k: QQi(Fraction(rng.randint(-9, 9), 7), Fraction(rng.randint(-9, 9), 7)) for k in idx}
    B = {}
    for a, b, c, d in idx:
        s = QQi(0)
        for (p, q, r, t) in ((a, b, c, d), (c, b, a, d), (a, d, c, b), (c, d, a, b)):
            s = s + M[p, q, r, t] + M[q, p, t, r].conjugate()
        B[a, b, c, d] = s
    R = [[[[B[a, b, c, d] for d in range(n)] for c in range(n)] for b in range(n)] for a in range(n)]
    zero = QQi(0)
    h = [[QQi(int(i == j)) for j in range(n)] for i in range(n)]
    Ric = [[sum((B[s, s, a, b] for s in range(n)), zero) for b in range(n)] for a in range(n)]
    Rs = sum((Ric[s][s] for s in range(n)), zero)
    return webster_tracefree(R, Ric, Rs, h, n)


def normal_form_rho(c):
    """``Im w - ||z||^2 + (1/4) sum c z_a zbar_b z_c zbar_d``."""
    n = c.shape[0]
    N = n + 1
    z, zb = _coords(N)
    p = (z[n] - zb[n]) * _const(QQi(0, Fraction(-1, 2)), N)
    for j in range(n):
        p = p - z[j] * zb[j]
    quarter = Fraction(1, 4)
    for a, b, cc, d in np.ndindex(n, n, n, n):
        if c[a, b, cc, d]:
            p = p + _const(c[a, b, cc, d] * QQi(quarter), N) * z[a] * zb[b] * z[cc] * zb[d]
    return polynomial(p)


NORMAL_FORM_SIGN = -1


def _normal_form_facts(p):
    from . import pseudohermitian as ph
    c = random_tracefree_quartic(p["seed"])

    def match(ctx):
        S = ph.curvature_general(ctx).S4.data
        return max(magnitude(S[i] - ctx.backend.coerce(NORMAL_FORM_SIGN * c[i])) for i in np.ndindex(c.shape)), 0

    return [KnownFact("S_at_origin_is_minus_c", match, 1e-9)]


def _normal_form_random(p, rng, backend):
    c = random_tracefree_quartic(p["seed"])
    surface = Hypersurface(normal_form_rho(c), 2, name="normal-form")
    for _ in range(20):
        z = [complex(rng.gauss(0, 0.3), rng.gauss(0, 0.3)) for _ in range(2)]
        seed = z + [complex(rng.gauss(0, 0.3), 0)]
        try:
            return point_place(surface, seed, (0, 0, 1j), backend)
        except CRWeylError:
            continue
    raise NoConvergence("could not draw a valid random point")


# ---------------------------------------------------------------------------
# registry


def _n(p):
    return int(p.get("n", 2))


CATALOG = {
    "sphere": CatalogEntry(
        "sphere", {"n": Fraction(2)},
        build=lambda p: Hypersurface(sphere_rho(_n(p)), _n(p), name="sphere"),
        sample_point=lambda p, b: (QQi(0),) * _n(p) + (QQi(1),),
        facts=_sphere_facts,
        random_point=lambda p, rng, b: _radial_random(Hypersurface(sphere_rho(_n(p)), _n(p)), rng, b),
        doc="unit sphere ||Z||^2 = 1 in C^{n+1}"),
    "ellipsoid-rev": CatalogEntry(
        "ellipsoid-rev", {"a": Fraction(1, 2), "n": Fraction(2)},
        build=lambda p: Hypersurface(ellipsoid_rev_rho(p["a"], _n(p)), _n(p), name="ellipsoid-rev"),
        sample_point=lambda p, b: ellipsoid_rev_point(p["a"], _n(p), backend=b),
        facts=_ellipsoid_rev_facts,
        random_point=_ellipsoid_rev_random,
        doc="E(a): ||z||^2 + |w|^2 + Re(a w^2) = 1"),
    "ellipsoid": CatalogEntry(
        "ellipsoid", {"n": Fraction(2)},
        build=lambda p: Hypersurface(ellipsoid_rho(*_ellipsoid_ab(p)), _n(p), name="ellipsoid"),
        sample_point=lambda p, b: point_place(
            Hypersurface(ellipsoid_rho(*_ellipsoid_ab(p)), _n(p)),
            [complex(1, 1) / (j + 2) for j in range(_n(p))] + [complex(0.5, 0.5)], "radial", b),
        facts=_ellipsoid_facts,
        random_point=lambda p, rng, b: _radial_random(Hypersurface(ellipsoid_rho(*_ellipsoid_ab(p)), _n(p)), rng, b),
        doc="diagonal ellipsoid sum b_j|z_j|^2 + Re(a_j z_j^2) = 1 (keys a1.., b1..)"),
    "tube": CatalogEntry(
        "tube", {"n": Fraction(2)},
        build=lambda p: Hypersurface(tube_rho(_n(p)), _n(p), name="tube"),
        sample_point=lambda p, b: tube_point(_n(p)),
        facts=_tube_facts,
        random_point=_tube_random,
        doc="tube over the sphere: 2 ||Re Z||^2 = 1"),
    "pluriharmonic": CatalogEntry(
        "pluriharmonic", {"seed": Fraction(0), "eps": Fraction(1, 10), "n": Fraction(2)},
        build=_pluri_surface,
        sample_point=lambda p, b: point_place(_pluri_surface(p), (0,) * _n(p) + (1,), "radial", b),
        facts=_pluri_facts,
        random_point=_pluri_random,
        doc="||Z||^2 - 1 + eps Re psi, psi random cubic+quartic holomorphic"),
    "normal-form": CatalogEntry(
        "normal-form", {"seed": Fraction(0)},
        build=lambda p: Hypersurface(normal_form_rho(random_tracefree_quartic(p["seed"])), 2, name="normal-form"),
        sample_point=lambda p, b: (QQi(0),) * 3,
        facts=_normal_form_facts,
        random_point=_normal_form_random,
        doc="Im w - ||z||^2 + (1/4) sum c z zbar z zbar, random tracefree c"),
}


def parse_surface_spec(spec):
    """``"NAME:k=v,..."`` -> ``(entry, params)``."""
    name, _, rest = spec.partition(":")
    name = name.strip()
    entry = CATALOG.get(name)
    if entry is None:
        raise UnknownSurface(f"unknown surface {name!r}; known: {', '.join(sorted(CATALOG))}")
    params = dict(entry.defaults)
    if rest.strip():
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"surface parameter {item!r} is not of the form key=value")
            params[key.strip()] = parse_number(val)
    return entry, params


def build_surface(spec):
    entry, params = parse_surface_spec(spec)
    return entry.build(params), entry, params


__all__ = ["CATALOG", "CatalogEntry", "KnownFact", "parse_surface_spec", "build_surface",
           "point_place", "parse_point", "parse_complex", "parse_number",
           "sphere_rho", "ellipsoid_rev_rho", "ellipsoid_rev_point", "ellipsoid_rho", "tube_rho",
           "tube_point", "tube_norm_s2", "tube_s_power", "pluriharmonic_rho", "pluriharmonic_psi",
           "random_tracefree_quartic", "normal_form_rho", "NORMAL_FORM_SIGN", "e_norm_s2", "e_x_tilde"]
