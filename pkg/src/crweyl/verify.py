"""The acceptance checks, runnable from the CLI (``crweyl verify``) and pytest.

Every check is evaluated at the target and tolerance it is specified with;
failures are reported with the measured values, never relaxed.  Random
points come from ``random.Random(seed + criterion id)``, so runs are
reproducible.
"""
import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import gmpy2
import numpy as np

from . import catalog as cat
from . import invariants as inv
from . import pseudohermitian as ph
from .backend import QQi, get_backend, magnitude
from .config import DELTA_B, DELTA_B_CONVENTIONS
from .field import field_diff, field_eval, from_text, log, mul, powrat
from .frame import Hypersurface, context_build, fefferman_field, squared_wrapper
from .tensor import cmw_norm, cmw_power_scalar

DEFAULT_SEED = 20240917


@dataclass
class SubCheck:
    label: str
    measured: object
    target: str
    ok: bool

    def to_dict(self):
        m = self.measured
        if not isinstance(m, (str, int, bool)) and m is not None:
            m = _fmt(m)
        return {"label": self.label, "measured": m, "target": self.target, "ok": bool(self.ok)}


@dataclass
class CheckResult:
    id: int
    key: str
    title: str
    subchecks: list = field(default_factory=list)
    seconds: float = 0.0
    error: str = None

    @property
    def passed(self):
        return self.error is None and bool(self.subchecks) and all(s.ok for s in self.subchecks)

    def add(self, label, measured, target, ok):
        self.subchecks.append(SubCheck(label, measured, target, bool(ok)))

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        bad = [s for s in self.subchecks if not s.ok]
        if self.error:
            extra = f" error: {self.error}"
        elif bad:
            extra = "; ".join(f"{s.label}: {_fmt(s.measured)} (target {s.target})" for s in bad)
            extra = " failing: " + extra
        else:
            extra = ""
        return f"[{status}] criterion {self.id:2d} {self.key}: {self.title}{extra}"

    def to_dict(self):
        return {"id": self.id, "key": self.key, "title": self.title, "passed": self.passed,
                "seconds": round(self.seconds, 3), "error": self.error,
                "subchecks": [s.to_dict() for s in self.subchecks]}

    def to_json(self):
        return json.dumps(self.to_dict())


def _fmt(x):
    if isinstance(x, (Fraction, QQi)):
        return str(x)
    try:
        c = complex(x)
    except TypeError:
        return str(x)
    if c.imag == 0:
        return f"{c.real:.10g}"
    return f"{c.real:.10g}{c.imag:+.10g}i"


def _params(params):
    return ",".join(f"{k}={v}" for k, v in params.items())


def _rel(a, b):
    return magnitude(a - b) / max(magnitude(b), 1e-300)


def _rand_points(entry_key, params, n_points, rng, backend):
    entry = cat.CATALOG[entry_key]
    return [entry.random_point(params, rng, backend) for _ in range(n_points)]


def _surface(entry_key, **params):
    entry = cat.CATALOG[entry_key]
    p = dict(entry.defaults)
    p.update({k: Fraction(v) for k, v in params.items()})
    return entry.build(p), p


# ---------------------------------------------------------------------------
# criteria


def crit_sphere(res, rng, backend):
    for n in (2, 3):
        S, p = _surface("sphere", n=n)
        worst = 0.0
        for pt in _rand_points("sphere", p, 100, rng, backend):
            ctx = context_build(S, pt, backend)
            worst = max(worst, ph.curvature_general(ctx).S4.max_abs())
        res.add(f"n={n} max|S| over 100 points", worst, "< 1e-10", worst < 1e-10)


def crit_tube(res, rng, backend):
    S, p = _surface("tube", n=2)
    w = {k: 0.0 for k in ("rscal", "ric", "norm", "nabla", "iprime", "s3")}
    last = {}
    for pt in _rand_points("tube", p, 50, rng, backend):
        ctx = context_build(S, pt, backend, order=6)
        P = ph.curvature_general(ctx)
        h = ctx.h
        geo = ph.geometry(ctx)
        norm = cmw_norm(P.S4, ctx)
        s3 = cmw_power_scalar(P.S4, 3, ctx)
        ip = inv.i_prime_at(ctx)
        w["rscal"] = max(w["rscal"], magnitude(P.Rscal - 2))
        w["ric"] = max(w["ric"], max(magnitude(P.Ric.data[i, j] - h[i][j]) for i in range(2) for j in range(2)))
        w["norm"] = max(w["norm"], magnitude(norm - ctx.backend.coerce(Fraction(1, 6))))
        w["nabla"] = max(w["nabla"], max(geo.covd(geo.S_field, d).max_abs() for d in ("hol", "anti", "T")))
        w["iprime"] = max(w["iprime"], magnitude(ip - ctx.backend.coerce(Fraction(1, 36))))
        w["s3"] = max(w["s3"], magnitude(s3 - ctx.backend.coerce(Fraction(-8, 27))))
        last = {"norm": norm, "iprime": ip, "s3": s3}
    res.add("max|Rscal - 2|", w["rscal"], "<= 1e-10", w["rscal"] <= 1e-10)
    res.add("max|Ric - h|", w["ric"], "<= 1e-10", w["ric"] <= 1e-10)
    res.add(f"max||S|^2 - 1/6| (|S|^2 = {_fmt(last['norm'])})", w["norm"], "<= 1e-10", w["norm"] <= 1e-10)
    res.add("max|nabla S| (Z, Zbar, T)", w["nabla"], "< 1e-9", w["nabla"] < 1e-9)
    res.add(f"max|I' - 1/36| (I' = {_fmt(last['iprime'])})", w["iprime"], "<= 1e-9", w["iprime"] <= 1e-9)
    res.add(f"max|S^3 + 8/27| (S^3 = {_fmt(last['s3'])})", w["s3"], "<= 1e-9", w["s3"] <= 1e-9)


def crit_tube_n3(res, rng, backend):
    S, p = _surface("tube", n=3)
    target = (Fraction(1, 4) - Fraction(3, 2)) ** 4
    worst, val = 0.0, None
    for pt in _rand_points("tube", p, 5, rng, backend):
        ctx = context_build(S, pt, backend)
        val = cmw_power_scalar(ph.curvature_general(ctx).S4, 4, ctx)
        worst = max(worst, magnitude(val - ctx.backend.coerce(target)))
    res.add(f"max|S^4 - {target}| (S^4 = {_fmt(val)})", worst, "<= 1e-9", worst <= 1e-9)
    res.add("S^4 > 0", val, "> 0", complex(val).real > 0)


def _e_points(a, count, rng, backend):
    S, p = _surface("ellipsoid-rev", a=a)
    return S, _rand_points("ellipsoid-rev", p, count, rng, backend)


def crit_e_norm(res, rng, backend):
    for a in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
        S, pts = _e_points(a, 20, rng, backend)
        A = gmpy2.mpq(a.numerator, a.denominator)
        worst = 0.0
        for pt in pts:
            ctx = context_build(S, pt, backend)
            worst = max(worst, _rel(ph.geometry(ctx).S_norm2.value, cat.e_norm_s2(A, pt[:2], pt[2])))
        res.add(f"a={a} max rel err |S|^2 vs closed form (20 pts)", worst, "<= 1e-9", worst <= 1e-9)


def crit_e_x(res, rng, backend):
    # the same random points as the |S|^2 criterion
    rng = random.Random(res.seed_for(4))
    for a in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
        S, pts = _e_points(a, 20, rng, backend)
        A = gmpy2.mpq(a.numerator, a.denominator)
        worst, nonzero = 0.0, True
        for pt in pts:
            ctx = context_build(S, pt, backend)
            X = inv.x_alpha(inv.pe_scale(ctx))
            ref = cat.e_x_tilde(A, pt[:2], pt[2], weight=1)
            scale = max(magnitude(c) for c in ref)
            worst = max(worst, max(magnitude(x - c) for x, c in zip(X, ref)) / scale)
            if scale > 0 and max(magnitude(x) for x in X) == 0:
                nonzero = False
        res.add(f"a={a} max rel err X~ vs closed form (20 pts)", worst, "<= 1e-8", worst <= 1e-8)
        res.add(f"a={a} X~ nonzero where the closed form is", nonzero, "true", nonzero)
    # the single reference value at p0
    S, _ = _surface("ellipsoid-rev", a=Fraction(1, 2))
    ctx = context_build(S, cat.ellipsoid_rev_point(Fraction(1, 2), backend=backend), backend)
    X = inv.x_alpha(inv.pe_scale(ctx))
    res.add("X~_1 at p0", X[0], "-2.2410e-3 (rel 1e-8)", _rel(X[0], -2.2410e-3) <= 1e-8)
    res.add("X~_2 at p0", X[1], "0", magnitude(X[1]) < 1e-30)


def crit_div(res, rng, backend):
    backend.activate()
    worst = 0.0
    seen = {}
    for k in range(10):
        a = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))[k % 3]
        S0, _ = _surface("ellipsoid-rev", a=a)
        v = [complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(2)]
        v = [backend.coerce(x) for x in v]
        nv = gmpy2.sqrt(sum(abs(x) ** 2 for x in v))
        pt = (v[0] / nv, v[1] / nv, backend.coerce(0))
        widx = 1 if magnitude(pt[0]) >= magnitude(pt[1]) else 2
        ctx = context_build(S0.with_w_index(widx), pt, backend)
        d = inv.div_x(inv.pe_scale(ctx))
        target = -gmpy2.mpq(a.numerator, a.denominator) ** 4 * (9 * gmpy2.mpq(a.numerator, a.denominator) ** 2 + 1) / 24
        worst = max(worst, _rel(d, target))
        seen[a] = d
    for a, d in seen.items():
        res.add(f"a={a} div X~ at w=0", d, f"{-a ** 4 * (9 * a ** 2 + 1) / 24}", _rel(d, gmpy2.mpq(-a ** 4 * (9 * a ** 2 + 1) / 24)) <= 1e-8)
    res.add("max rel err over 10 points", worst, "<= 1e-8", worst <= 1e-8)


def _unit_vs_general(ctx):
    U = ph.curvature_unit_hessian(ctx)
    G = ph.curvature_general(ctx)
    scale = max(1.0, G.R4.max_abs())
    return max((U.S4 - G.S4).max_abs(), (U.R4 - G.R4).max_abs()) / scale


def crit_cross(res, rng, backend):
    cases = [("sphere", {"n": 2}), ("sphere", {"n": 3}), ("ellipsoid-rev", {"a": Fraction(1, 4)}),
             ("ellipsoid-rev", {"a": Fraction(1, 2)}), ("ellipsoid-rev", {"a": Fraction(3, 4)}),
             ("tube", {"n": 2})]
    cases += [("pluriharmonic", {"seed": rng.randrange(10 ** 6), "eps": Fraction(1, 5)}) for _ in range(5)]
    for key, params in cases:
        S, p = _surface(key, **params)
        worst = 0.0
        for pt in _rand_points(key, p, 3, rng, backend):
            worst = max(worst, _unit_vs_general(context_build(S, pt, backend)))
        label = key + ":" + ",".join(f"{k}={v}" for k, v in params.items())
        res.add(f"{label} max rel |unit-Hessian route - general route|", worst, "<= 1e-9", worst <= 1e-9)


def _spsh_surfaces(rng):
    return [("sphere", {"n": 2}), ("sphere", {"n": 3}), ("ellipsoid-rev", {"a": Fraction(1, 2)}),
            ("ellipsoid-rev", {"a": Fraction(-1, 3)}), ("tube", {"n": 2}),
            ("ellipsoid", {"a1": Fraction(1, 3), "a3": Fraction(-1, 4), "b2": Fraction(2)}),
            ("pluriharmonic", {"seed": rng.randrange(10 ** 6), "eps": Fraction(1, 10)})]


def crit_torsion(res, rng, backend):
    for key, params in _spsh_surfaces(rng):
        S, p = _surface(key, **params)
        worst = 0.0
        for pt in _rand_points(key, p, 5, rng, backend):
            ctx = context_build(S, pt, backend)
            A = ph.torsion(ctx)
            worst = max(worst, (A - ph.torsion_liluk(ctx)).max_abs() / max(1.0, A.max_abs()))
        res.add(f"{key}:{_params(params)} torsion routes", worst, "<= 1e-9", worst <= 1e-9)
    S, _ = _surface("ellipsoid-rev", a=Fraction(1, 2))
    ctx = context_build(S, cat.ellipsoid_rev_point(Fraction(1, 2), backend=backend), backend)
    A = ph.torsion(ctx).data
    want = QQi(0, Fraction(-4, 3))
    res.add("A_11 at p0", A[0, 0], "-4i/3 +- 1e-10", magnitude(A[0, 0] - ctx.backend.coerce(want)) <= 1e-10)
    res.add("A_12, A_22 at p0", max(magnitude(A[0, 1]), magnitude(A[1, 1])), "0",
            max(magnitude(A[0, 1]), magnitude(A[1, 1])) <= 1e-10)


def crit_gauss(res, rng, backend):
    for key, params in _spsh_surfaces(rng):
        S, p = _surface(key, **params)
        worst = 0.0
        for pt in _rand_points(key, p, 20, rng, backend):
            worst = max(worst, max(ph.gauss_check(context_build(S, pt, backend))))
        res.add(f"{key}:{_params(params)} max Gauss residual (20 pts)", worst, "< 1e-9", worst < 1e-9)


def crit_squared(res, rng, backend):
    for key, params in (("sphere", {"n": 2}), ("ellipsoid-rev", {"a": Fraction(1, 2)})):
        S, p = _surface(key, **params)
        worst = 0.0
        for pt in _rand_points(key, p, 5, rng, backend):
            base = context_build(S, pt, backend)
            P0 = ph.curvature_general(base)
            for C in (Fraction(1, 2), Fraction(2)):
                ctx = context_build(squared_wrapper(S, C), pt, backend)
                P1 = ph.curvature_general(ctx)
                hd = max(magnitude(x - y) for x, y in zip(np.ravel(base.h), np.ravel(ctx.h)))
                scale = max(1.0, max(magnitude(x) for x in np.ravel(base.h)))
                for a, b in ((P0.A, P1.A), (P0.R4, P1.R4), (P0.S4, P1.S4)):
                    scale = max(scale, a.max_abs())
                    hd = max(hd, max(magnitude(x - y) for x, y in zip(a.data.flat, b.data.flat)))
                worst = max(worst, hd / scale)
        res.add(f"{key} max rel change of h, A, R, S under rho + C rho^2", worst, "<= 1e-8", worst <= 1e-8)


def conformal_factor(eps):
    """``1 + eps Re z1`` as a field."""
    e = Fraction(eps) / 2
    return from_text(f"1+({e})*(z1+conj(z1))", 3)


def crit_conformal(res, rng, backend):
    S, p = _surface("ellipsoid-rev", a=Fraction(1, 2))
    pts = _rand_points("ellipsoid-rev", p, 10, rng, backend)
    worst = {c: 0.0 for c in DELTA_B_CONVENTIONS}
    for pt in pts:
        ctx = context_build(S, pt, backend, order=6)
        for eps in (Fraction(1, 20), Fraction(1, 10)):
            f = conformal_factor(eps)
            for conv in DELTA_B_CONVENTIONS:
                worst[conv] = max(worst[conv], inv.conformal_law_check(ctx, f, conv))
    passing = [c for c in DELTA_B_CONVENTIONS if worst[c] < 1e-7]
    for c in DELTA_B_CONVENTIONS:
        res.add(f"max residual with Delta_b {c}", worst[c], "< 1e-7" if c == DELTA_B else "(other flag)",
                worst[c] < 1e-7 if c == DELTA_B else True)
    res.add("exactly one convention passes and it is the configured one", passing, f"[{DELTA_B!r}]",
            passing == [DELTA_B])


def crit_normal_form(res, rng, backend):
    signs = []
    worst = 0.0
    for _ in range(10):
        seed = rng.randrange(10 ** 6)
        c = cat.random_tracefree_quartic(seed)
        ctx = context_build(Hypersurface(cat.normal_form_rho(c), 2), (0, 0, 0), backend)
        S = ph.curvature_general(ctx).S4.data
        errs = {s: max(magnitude(S[i] - ctx.backend.coerce(s * c[i])) for i in np.ndindex(c.shape)) for s in (1, -1)}
        s = min(errs, key=errs.get)
        signs.append(s)
        worst = max(worst, errs[s])
    res.add("max |S|_0 - sign c| over 10 draws", worst, "< 1e-9", worst < 1e-9)
    res.add("single consistent sign", sorted(set(signs)), "one sign", len(set(signs)) == 1)


def crit_sv(res, rng, backend):
    S, p = _surface("ellipsoid-rev", a=Fraction(1, 2))
    worst = 0.0
    for pt in _rand_points("ellipsoid-rev", p, 10, rng, backend):
        pe = inv.pe_scale(context_build(S, pt, backend))
        div = ph.div_cmw(pe.ctxTilde).data
        V = ph.v_tensor(pe.ctxTilde).data
        I = pe.ctxTilde.backend.coerce(2j)
        worst = max(worst, max(magnitude(div[i] + I * V[i]) for i in np.ndindex(div.shape)))
    res.add("max |div S + 2i V| in the volume-normalized scale", worst, "< 1e-7", worst < 1e-7)


# -- derivative oracle --------------------------------------------------------


def wirtinger_fd(f, point, j, barred, backend, h=None, levels=5):
    """Wirtinger derivative by central differences with Richardson extrapolation."""
    backend.activate()
    h = gmpy2.mpfr(2) ** -8 if h is None else h
    pt = [backend.coerce(c) for c in point]
    I = backend.coerce(1j)

    def central(step):
        def at(delta):
            q = list(pt)
            q[j] = q[j] + delta
            return field_eval(f, q, backend)
        dx = (at(step) - at(-step)) / (2 * step)
        dy = (at(step * I) - at(-step * I)) / (2 * step)
        return (dx + I * dy) / 2 if barred else (dx - I * dy) / 2

    table = [central(h / 2 ** k) for k in range(levels)]
    for m in range(1, levels):
        fac = 4 ** m
        table = [(fac * table[k + 1] - table[k]) / (fac - 1) for k in range(len(table) - 1)]
    return table[0]


def derivative_oracle_fields():
    """Composite fields exercising every node kind."""
    fields = []
    for key, params in (("sphere", {"n": 2}), ("ellipsoid-rev", {"a": Fraction(1, 2)}), ("tube", {"n": 2}),
                        ("pluriharmonic", {"seed": 7, "eps": Fraction(1, 10)})):
        S, _ = _surface(key, **params)
        rho = S.rho
        J = fefferman_field(rho, 2)
        fields += [rho, mul(powrat(J, Fraction(-1, 4)), rho), log(J), mul(rho, rho, rho).conj()]
    return fields


def crit_derivatives(res, rng, backend):
    fields = derivative_oracle_fields()
    worst = 0.0
    for _ in range(100):
        f = rng.choice(fields)
        j = rng.randrange(3)
        barred = rng.random() < 0.5
        pt = [complex(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)) for _ in range(3)]
        exact = field_eval(field_diff(f, j, barred), pt, backend)
        fd = wirtinger_fd(f, pt, j, barred, backend)
        worst = max(worst, magnitude(exact - fd) / max(magnitude(exact), 1e-3))
    res.add("max rel |field_diff - Richardson FD| over 100 triples", worst, "<= 1e-7", worst <= 1e-7)


# -- exact backend ------------------------------------------------------------

SPHERE_RATIONAL = [(QQi(Fraction(1, 3)), QQi(0, Fraction(2, 3)), QQi(Fraction(2, 3))),
                   (QQi(0, Fraction(2, 7)), QQi(Fraction(3, 7)), QQi(0, Fraction(6, 7))),
                   (QQi(Fraction(1, 9), Fraction(4, 9)), QQi(0), QQi(0, Fraction(8, 9)))]
TUBE_RATIONAL = [(QQi(Fraction(1, 2), Fraction(1, 3)), QQi(0, Fraction(1, 4)), QQi(Fraction(1, 2), Fraction(-1, 4))),
                 (QQi(Fraction(1, 6), 2), QQi(Fraction(1, 6), Fraction(-1, 2)), QQi(Fraction(2, 3), Fraction(1, 5))),
                 (QQi(Fraction(3, 10), 0), QQi(Fraction(2, 5), 1), QQi(Fraction(1, 2), Fraction(-3, 7))),
                 (QQi(0, Fraction(5, 3)), QQi(Fraction(1, 10), 0), QQi(Fraction(7, 10), Fraction(1, 9)))]


def crit_exact(res, rng, backend):
    ex = get_backend("exact")
    S, _ = _surface("sphere", n=2)
    all_zero = True
    for pt in SPHERE_RATIONAL:
        ctx = context_build(S, pt, ex)
        all_zero &= all(x == 0 for x in ph.curvature_general(ctx).S4.data.flat)
    res.add("sphere: S == 0 exactly at rational points", all_zero, "true", all_zero)
    T, _ = _surface("tube", n=2)
    vals = {"rscal": set(), "ric_eq_h": set(), "norm": set(), "s3": set(), "nabla_zero": set()}
    for pt in TUBE_RATIONAL:
        ctx = context_build(T, pt, ex, order=5)
        P = ph.curvature_general(ctx)
        geo = ph.geometry(ctx)
        vals["rscal"].add(P.Rscal)
        vals["ric_eq_h"].add(all(P.Ric.data[i, j] == ctx.h[i][j] for i in range(2) for j in range(2)))
        vals["norm"].add(cmw_norm(P.S4, ctx))
        vals["s3"].add(cmw_power_scalar(P.S4, 3, ctx))
        vals["nabla_zero"].add(all(ph._val(x) == 0 for d in ("hol", "anti", "T")
                                     for x in geo.covd(geo.S_field, d).data.flat))
    res.add("tube: Rscal == 2 exactly", sorted(map(str, vals["rscal"])), "['2']", vals["rscal"] == {QQi(2)})
    res.add("tube: Ric == h exactly", sorted(vals["ric_eq_h"]), "[True]", vals["ric_eq_h"] == {True})
    res.add("tube: nabla S == 0 exactly", sorted(vals["nabla_zero"]), "[True]", vals["nabla_zero"] == {True})
    res.add("tube: |S|^2 == 1/6 exactly", sorted(map(str, vals["norm"])), "['1/6']", vals["norm"] == {QQi(Fraction(1, 6))})
    res.add("tube: S^3 == -8/27 exactly", sorted(map(str, vals["s3"])), "['-8/27']", vals["s3"] == {QQi(Fraction(-8, 27))})


# ---------------------------------------------------------------------------
# registry and runner


@dataclass
class Criterion:
    id: int
    key: str
    title: str
    tags: tuple
    run: Callable


CRITERIA = [
    Criterion(1, "sphere-vanishing", "S = 0 on spheres n=2,3 at 100 random points", ("sphere",), crit_sphere),
    Criterion(2, "tube-values", "tube n=2: R, Ric, |S|^2, nabla S, I', S^3", ("tube",), crit_tube),
    Criterion(3, "tube-n3-sign", "tube n=3: S^4 value and sign", ("tube",), crit_tube_n3),
    Criterion(4, "e-norm", "E(a): |S|^2 closed form", ("ellipsoid",), crit_e_norm),
    Criterion(5, "e-x-closed-form", "E(a): X~ closed form and nontriviality", ("ellipsoid", "x"), crit_e_x),
    Criterion(6, "e-divergence", "E(a): div X~ at w = 0", ("ellipsoid", "x", "divx"), crit_div),
    Criterion(7, "cross-formula", "unit-Hessian route == general route", ("routes",), crit_cross),
    Criterion(8, "torsion-routes", "torsion routes agree; A_11 at p0", ("torsion", "routes"), crit_torsion),
    Criterion(9, "gauss", "Gauss equations on invertible-Hessian surfaces", ("gauss",), crit_gauss),
    Criterion(10, "rho-squared", "invariance under rho -> rho + C rho^2", ("invariance",), crit_squared),
    Criterion(11, "conformal-law", "transformation law of I' pins Delta_b", ("conformal",), crit_conformal),
    Criterion(12, "normal-form", "S at 0 of a normal-form quartic is +-c", ("normal-form",), crit_normal_form),
    Criterion(13, "s-v-identity", "div S = -2i V in the volume-normalized scale", ("sv",), crit_sv),
    Criterion(14, "derivative-oracle", "field_diff vs Richardson differences", ("derivatives", "jetring"),
              crit_derivatives),
    Criterion(15, "exact-backend", "exact rationals on sphere and tube", ("rational", "exact"), crit_exact),
]


class _Result(CheckResult):
    seed = DEFAULT_SEED

    def seed_for(self, cid):
        return self.seed + cid


def select(only=None):
    """Criteria matching any of ``only`` (ids, keys or tags); all if empty."""
    if not only:
        return list(CRITERIA)
    wanted = {str(x).strip() for x in only if str(x).strip()}
    out = [c for c in CRITERIA if str(c.id) in wanted or c.key in wanted or wanted & set(c.tags)]
    if not out:
        raise ValueError(f"no criterion matches {sorted(wanted)}")
    return out


def run_criterion(crit, backend=None, seed=DEFAULT_SEED):
    backend = get_backend() if backend is None else get_backend(backend)
    res = _Result(crit.id, crit.key, crit.title)
    res.seed = seed
    t = time.perf_counter()
    try:
        crit.run(res, random.Random(seed + crit.id), backend)
    except Exception as exc:  # reported, not raised: verify never throws
        res.error = f"{type(exc).__name__}: {exc}"
    res.seconds = time.perf_counter() - t
    return res


def run(only=None, backend=None, seed=DEFAULT_SEED, stream=None):
    """Run the selected criteria; optionally write one JSON line each to ``stream``."""
    out = []
    for crit in select(only):
        r = run_criterion(crit, backend, seed)
        out.append(r)
        if stream is not None:
            stream.write(r.to_json() + "\n")
            stream.flush()
    return out


def catalog_facts(backend=None):
    """Evaluate every catalog entry's known facts at its sample point."""
    backend = get_backend() if backend is None else get_backend(backend)
    rows = []
    for name, entry in cat.CATALOG.items():
        params = dict(entry.defaults)
        facts = entry.facts(params)
        surface = entry.build(params)
        order = max((f.min_order for f in facts), default=4)
        ctx = context_build(surface, entry.sample_point(params, backend), backend, order=order)
        for f in facts:
            got, want = f.check(ctx)
            err = magnitude(got - ctx.backend.coerce(want) if not isinstance(want, int) else got - want)
            if f.relative:
                err /= max(magnitude(ctx.backend.coerce(want)), 1e-300)
            rows.append((name, f.name, got, want, err, err <= f.tol))
    return rows


__all__ = ["CRITERIA", "Criterion", "CheckResult", "run", "run_criterion", "select", "catalog_facts",
           "wirtinger_fd", "DEFAULT_SEED"]
