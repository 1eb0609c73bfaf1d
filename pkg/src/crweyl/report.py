"""Invariant reports: computation and JSON serialization.

Complex numbers are written as ``{"re": str, "im": str}`` with every digit
the backend carries (exact rationals as ``p/q``), so a report read back
reproduces the same values.  Tensor components are flattened with index
strings, e.g. ``S_{1 1bar 2 2bar}``.
"""
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np

from .backend import QQi, get_backend, magnitude, re_part
from .errors import CRWeylError

# name -> accepted spellings on the command line
QUANTITIES = {
    "h": ("h", "levi"),
    "h_inv": ("h_inv", "hinv"),
    "h_hol": ("h_hol", "hhol"),
    "xi": ("xi",),
    "r": ("r",),
    "J": ("J", "j"),
    "A": ("A", "torsion"),
    "Ric": ("Ric", "ricci"),
    "rscal": ("rscal", "Rscal", "R"),
    "S": ("S", "cmw"),
    "norm_s2": ("norm_s2", "normS2"),
    "X": ("X", "x"),
    "x_norm": ("x_norm", "xnorm", "normX"),
    "i_prime": ("i_prime", "Iprime"),
    "div_x": ("div_x", "divX"),
    "residuals": ("residuals",),
}
DIM_FIVE = ("X", "x_norm", "i_prime", "div_x")
DEFAULT_SHOW = ("h", "A", "Ric", "rscal", "S", "norm_s2", "X", "i_prime", "div_x", "residuals")
_ALIASES = {alias: name for name, spellings in QUANTITIES.items() for alias in spellings}


def canonical_show(items):
    """Map user spellings (``normS2``, ``Iprime``...) to report names."""
    out = []
    for item in items:
        item = item.strip()
        if not item:
            continue
        if item not in _ALIASES:
            raise ValueError(f"unknown quantity {item!r}; choose from {', '.join(QUANTITIES)}")
        name = _ALIASES[item]
        if name not in out:
            out.append(name)
    return out


# -- scalar encoding ----------------------------------------------------------


def _num_str(x):
    if isinstance(x, (Fraction, int)) or type(x) is type(gmpy2.mpq(0)):
        q = Fraction(int(x.numerator), int(x.denominator)) if not isinstance(x, int) else Fraction(x)
        return str(q)
    if type(x) is type(gmpy2.mpfr(0)):
        return x.__format__(f".{max(17, int(x.precision * 0.30103) + 2)}g")
    return repr(float(x))


def encode(x):
    """``{"re", "im"}`` decimal strings for any backend scalar."""
    if type(x) is QQi:
        return {"re": str(x.re), "im": str(x.im)}
    if isinstance(x, (Fraction, int)):
        return {"re": str(Fraction(x)), "im": "0"}
    if hasattr(x, "real") and hasattr(x, "imag"):
        return {"re": _num_str(x.real), "im": _num_str(x.imag)}
    return {"re": _num_str(x), "im": "0"}


def decode(obj, backend=None):
    """Inverse of :func:`encode` (exact strings stay exact)."""
    re, im = obj["re"], obj["im"]
    if all("." not in s and "e" not in s.lower() and "inf" not in s and "nan" not in s for s in (re, im)):
        return QQi(Fraction(re), Fraction(im))
    backend = get_backend() if backend is None else get_backend(backend)
    backend.activate()
    if backend.exact or backend.name == "native":
        # diagnostics (residuals) of exact reports are plain doubles
        return complex(float(re), float(im))
    return gmpy2.mpc(gmpy2.mpfr(re), gmpy2.mpfr(im))


# -- index keys ---------------------------------------------------------------

def index_key(symbol, idx, kinds):
    """``S_{1 1bar 2 2bar}``; upper slots are not marked (the symbol says which)."""
    parts = ["0" if k.char else f"{i + 1}{'bar' if k.barred else ''}" for i, k in zip(idx, kinds)]
    return f"{symbol}_{{{' '.join(parts)}}}"


def flatten(symbol, data, kinds):
    data = np.asarray(data, dtype=object)
    return {index_key(symbol, idx, kinds): data[idx] for idx in np.ndindex(data.shape)}


# -- the report ---------------------------------------------------------------


@dataclass
class InvariantReport:
    surface: dict
    point: list
    backend: dict
    tolerances: dict
    values: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["point"] = [encode(c) for c in self.point]
        d["values"] = {k: encode(v) for k, v in self.values.items()}
        return d

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d, backend=None):
        be = backend if backend is not None else (
            get_backend(d["backend"]["kind"], d["backend"].get("precision")))
        return cls(
            surface=d["surface"],
            point=[decode(c, be) for c in d["point"]],
            backend=d["backend"],
            tolerances=d["tolerances"],
            values={k: decode(v, be) for k, v in d["values"].items()},
            notes=d.get("notes", {}),
        )

    @classmethod
    def from_json(cls, text, backend=None):
        return cls.from_dict(json.loads(text), backend)


def _scale_context(ctx, scale):
    """Context in which dimension-five invariants are evaluated, and its label."""
    from . import invariants as inv
    from . import pseudohermitian as ph
    if scale == "theta" or (scale == "auto" and ph.is_pseudo_einstein(ctx)):
        return ctx, "theta"
    if scale not in ("auto", "pe"):
        raise ValueError(f"unknown scale {scale!r}; use auto, pe or theta")
    pe = inv.pe_scale(ctx)
    return pe, "volume-normalized"


def _x_norm(X, h_inv, backend):
    """``sqrt(h^{bbar a} X_a conj(X_b))`` in the scale where X was computed."""
    n = len(X)
    q = sum(h_inv[b][a] * X[a] * X[b].conjugate() for a in range(n) for b in range(n))
    return backend.sqrt_real(re_part(q))


def compute_report(surface, coords, backend=None, show=DEFAULT_SHOW, scale="auto",
                   surface_info=None, tol=None):
    """Evaluate the requested quantities at one point.

    Dimension-five quantities are skipped (with a note) when ``n != 2``.
    """
    from . import invariants as inv
    from . import pseudohermitian as ph
    from .frame import DEFAULT_TOL, context_build
    from .tensor import CURVATURE_KINDS, LB, L, U, UB
    backend = get_backend() if backend is None else get_backend(backend)
    tol = DEFAULT_TOL if tol is None else tol
    show = canonical_show(show)
    ctx = context_build(surface, coords, backend, order=4, tol=tol)
    n = ctx.n
    vals = {}
    notes = {}
    curv = None

    def curvature():
        nonlocal curv
        if curv is None:
            curv = ph.curvature_general(ctx)
        return curv

    for q in show:
        if q == "h":
            vals.update(flatten("h", ctx.h, (L, LB)))
        elif q == "h_inv":
            vals.update(flatten("hinv", np.array(ctx.h_inv, dtype=object).T, (UB, U)))
        elif q == "h_hol":
            vals.update(flatten("hhol", ctx.h_hol, (L, L)))
        elif q == "xi":
            vals.update({f"xi^{{{j + 1}}}": x for j, x in enumerate(ctx.xi)})
        elif q == "r":
            vals["r"] = ctx.r
        elif q == "J":
            vals["J"] = ctx.J
        elif q == "A":
            vals.update(flatten("A", curvature().A.data, (L, L)))
        elif q == "Ric":
            vals.update(flatten("Ric", curvature().Ric.data, (L, LB)))
        elif q == "rscal":
            vals["rscal"] = curvature().Rscal
        elif q == "S":
            vals.update(flatten("S", curvature().S4.data, CURVATURE_KINDS))
        elif q == "norm_s2":
            vals["norm_s2"] = ph.geometry(ctx).S_norm2.value
        elif q == "residuals":
            g_c, g_t = (None, None)
            try:
                g_c, g_t = ph.gauss_check(ctx)
            except CRWeylError as exc:
                notes["gauss"] = f"{exc.code}: {exc}"
            if g_c is not None:
                vals["gauss_curvature_residual"] = g_c
                vals["gauss_torsion_residual"] = g_t
            vals["characteristic_residual"] = ph.characteristic_residual(ctx)
            vals["rho_residual"] = ctx.point.residual
    wanted5 = [q for q in show if q in DIM_FIVE]
    if wanted5:
        if n != 2:
            notes["dimension_five"] = f"X, I' and div X are defined for n = 2 only (n = {n})"
        else:
            target, label = _scale_context(ctx, scale)
            notes["scale"] = label
            if label == "theta":
                X = inv.x_general(target) if {"X", "x_norm"} & set(wanted5) else None
                if "X" in wanted5:
                    vals.update({f"X_{{{a + 1}}}": x for a, x in enumerate(X)})
                if "x_norm" in wanted5:
                    vals["x_norm"] = _x_norm(X, target.h_inv, backend)
                if "i_prime" in wanted5:
                    vals["i_prime"] = inv.i_prime_at(target)
                if "div_x" in wanted5:
                    vals["div_x"] = inv.div_x_at(target)
            else:
                X = inv.x_alpha(target) if {"X", "x_norm"} & set(wanted5) else None
                if "X" in wanted5:
                    vals.update({f"X_{{{a + 1}}}": x for a, x in enumerate(X)})
                if "x_norm" in wanted5:
                    vals["x_norm"] = _x_norm(X, target.ctxTilde.h_inv, backend)
                if "i_prime" in wanted5:
                    vals["i_prime"] = inv.i_prime(target)
                if "div_x" in wanted5:
                    vals["div_x"] = inv.div_x(target)
    info = dict(surface_info or {})
    info.setdefault("name", surface.name)
    info.update(n=n, w_index=surface.w_index)
    return InvariantReport(
        surface=info,
        point=list(ctx.coords),
        backend={"kind": "exact" if backend.exact else "float", "name": backend.name,
                 "precision": backend.precision},
        tolerances={k: getattr(tol, k) for k in ("on_surface", "frame", "matrix", "levi", "fefferman")},
        values=vals,
        notes=notes,
    )


def max_abs_value(report, prefix):
    return max((magnitude(v) for k, v in report.values.items() if k.startswith(prefix)), default=0.0)


__all__ = ["InvariantReport", "compute_report", "encode", "decode", "canonical_show", "flatten",
           "index_key", "QUANTITIES", "DEFAULT_SHOW"]
