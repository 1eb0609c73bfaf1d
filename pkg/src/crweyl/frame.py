"""Per-point hypersurface data: the frame Z_alpha and first-layer geometry.

Conventions
-----------
Coordinates are ``z_1..z_N`` with ``N = n + 1``; one of them, ``w``, is
distinguished and the remaining ``n`` are the Greek directions.  Python
indices are 0-based throughout: Greek index ``a`` refers to coordinate
``greek[a]``.

The frame is ``Z_a = d/dz_{greek[a]} - (rho_{greek[a]} / rho_w) d/dw``.
Matrices are stored so that ``h[a][b] = h_{a bbar}`` and
``h_inv[b][a] = h^{bbar a}``, i.e. ``h @ h_inv = I`` as ordinary matrices.
The ambient inverse ``h_amb[k][j]`` holds ``h^{j kbar}`` with the same
row/column placement, so that its Greek block equals ``h_inv``.

All quantities are kept as jets (truncated Taylor series) at the point so
that frame derivatives of them can be taken later; the ``value`` accessors
give the numbers at the point.  The contact form is ``theta = i dbar rho``
restricted to M.
"""
import math
from dataclasses import dataclass
from itertools import product as cartesian

import numpy as np

from .backend import get_backend, magnitude
from .errors import (FeffermanDegenerate, FrameDegenerate, LeviDegenerate,
                     OffSurface)
from .field import field_is_real, from_text, lift
from .field import add as f_add
from .field import mul as f_mul
from .field import neg as f_neg
from .field import field_diff
from .jet import Jet, JetEvaluator


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds; all relative unless noted."""

    on_surface: float = 1e-12
    frame: float = 1e-8
    matrix: float = 1e-10
    levi: float = 1e-10
    fefferman: float = 1e-14


DEFAULT_TOL = Tolerances()


class Hypersurface:
    """Real hypersurface ``{rho = 0}`` in C^{n+1}.

    Parameters
    ----------
    rho : ScalarField or str
        Real-valued defining field; strings are parsed with the polynomial
        grammar.
    n : int
        CR dimension.
    w_index : int, optional
        1-based index of the distinguished coordinate, default ``n + 1``.
    name : str, optional
        Label used in reports.
    """

    def __init__(self, rho, n, w_index=None, name=None):
        n = int(n)
        if n < 1:
            raise ValueError("CR dimension n must be at least 1")
        if isinstance(rho, str):
            rho = from_text(rho, n + 1)
        rho = lift(rho, n + 1)
        if rho.nvars != n + 1:
            raise ValueError(f"defining field has {rho.nvars} variables, expected {n + 1}")
        if field_is_real(rho) is False:
            raise ValueError("defining function must be real-valued")
        w_index = n + 1 if w_index is None else int(w_index)
        if not 1 <= w_index <= n + 1:
            raise ValueError(f"w_index must lie in 1..{n + 1}")
        self.rho = rho
        self.n = n
        self.N = n + 1
        self.w_index = w_index
        self.name = name or "custom"

    @property
    def w(self):
        return self.w_index - 1

    def with_rho(self, rho, name=None):
        return Hypersurface(rho, self.n, self.w_index, name or self.name)

    def with_w_index(self, w_index):
        return Hypersurface(self.rho, self.n, w_index, self.name)

    def __repr__(self):
        return f"Hypersurface({self.name!r}, n={self.n}, w_index={self.w_index})"


@dataclass(frozen=True)
class SurfacePoint:
    coords: tuple
    residual: float
    rho_w: object


# ---------------------------------------------------------------------------
# small dense linear algebra over any commutative ring (jets, scalars, fields)


def det(m):
    """Determinant by cofactor expansion; fine for the n <= 5 used here."""
    size = len(m)
    cache = {}

    def minor(row, cols):
        if row == size:
            return 1
        key = (row, cols)
        hit = cache.get(key)
        if hit is not None:
            return hit
        total = None
        sign = 1
        for c in cols:
            rest = tuple(x for x in cols if x != c)
            term = m[row][c] * minor(row + 1, rest)
            if sign < 0:
                term = -term
            total = term if total is None else total + term
            sign = -sign
        cache[key] = total
        return total

    return minor(0, tuple(range(size)))


def adjugate(m):
    """``adj[j][i] = (-1)^{i+j} det(m without row i, column j)``."""
    size = len(m)
    if size == 1:
        return [[1]]
    adj = [[None] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            sub = [[m[r][c] for c in range(size) if c != j] for r in range(size) if r != i]
            d = det(sub)
            adj[j][i] = d if (i + j) % 2 == 0 else -d
    return adj


def inverse(m):
    """Matrix inverse via adjugate; also returns the determinant."""
    d = det(m)
    adj = adjugate(m)
    inv_d = 1 / d if not isinstance(d, Jet) else d.recip()
    return [[adj[i][j] * inv_d for j in range(len(m))] for i in range(len(m))], d


def fefferman_field(rho, n):
    """J(rho) as a field: minus the determinant of the bordered complex Hessian."""
    N = n + 1
    d = [field_diff(rho, j) for j in range(N)]
    db = [field_diff(rho, k, True) for k in range(N)]
    G = [[field_diff(d[j], k, True) for k in range(N)] for j in range(N)]
    adj = adjugate(G)
    terms = [f_neg(f_mul(rho, det(G)))]
    for k in range(N):
        for j in range(N):
            terms.append(f_mul(db[k], adj[k][j], d[j]))
    return f_add(*terms)


# ---------------------------------------------------------------------------
# derivative oracles: cached mixed partials of one jet


class DerivOracle:
    """Mixed partials of a jet, keyed by the sorted tuple of jet variables."""

    def __init__(self, base):
        self._cache = {(): base}

    def __call__(self, idx):
        idx = tuple(sorted(idx))
        hit = self._cache.get(idx)
        if hit is None:
            hit = self(idx[:-1]).diff(idx[-1])
            self._cache[idx] = hit
        return hit


class LogDerivOracle(DerivOracle):
    """Partials of ``log g`` from the jet of ``g``, never forming ``log`` itself."""

    def __init__(self, g):
        self.g = DerivOracle(g)
        self._g_recip = None
        self._cache = {}

    def __call__(self, idx):
        idx = tuple(sorted(idx))
        hit = self._cache.get(idx)
        if hit is not None:
            return hit
        if not idx:
            hit = self.g(()).log()
        elif len(idx) == 1:
            if self._g_recip is None:
                self._g_recip = self.g(()).recip()
            hit = self.g(idx) * self._g_recip
        else:
            hit = self(idx[:-1]).diff(idx[-1])
        self._cache[idx] = hit
        return hit


class FrameContext:
    """Validated point on a hypersurface together with its jet cache.

    Build with :func:`context_build`.  ``order`` is the jet order of rho; a
    quantity involving k derivatives of rho is available to order
    ``order - k``.  :meth:`at_order` returns a (cached) context with deeper
    jets at the same point.
    """

    def __init__(self, surface, coords, backend=None, order=4, tol=DEFAULT_TOL, *, _rho_jet=None):
        backend = get_backend() if backend is None else get_backend(backend)
        backend.activate()
        self.surface = surface
        self.backend = backend
        self.tol = tol
        self.order = order
        self.n = surface.n
        self.N = surface.N
        self.w = surface.w
        self.greek = [j for j in range(self.N) if j != self.w]
        coords = tuple(backend.coerce(c) for c in coords)
        if len(coords) != self.N:
            raise ValueError(f"point needs {self.N} coordinates, got {len(coords)}")
        self.coords = coords
        self._higher = {order: self}
        self.frame_tag = object()
        self._cache = {}
        self._coef_cache = {}
        if _rho_jet is None:
            _rho_jet = JetEvaluator(coords, order, backend).jet(surface.rho)
        self.rho_jet = _rho_jet
        self.rho_d = DerivOracle(_rho_jet)
        self._validate_point()
        self._build()

    # -- setup ---------------------------------------------------------------
    def _validate_point(self):
        N, w = self.N, self.w
        scale = max(1.0, sum(magnitude(c) ** 2 for c in self.coords))
        residual = magnitude(self.rho_jet.value)
        if residual > self.tol.on_surface * scale:
            raise OffSurface(f"|rho(p)| = {residual:.3e} exceeds {self.tol.on_surface:.1e}*{scale:.3g}")
        grad = math.sqrt(sum(magnitude(self.rho_d((j,)).value) ** 2 for j in range(N)))
        rho_w = self.rho_d((w,)).value
        if magnitude(rho_w) <= self.tol.frame * (1 + grad):
            best = max(range(N), key=lambda j: magnitude(self.rho_d((j,)).value))
            raise FrameDegenerate(
                f"rho_w vanishes at the point (|rho_w| = {magnitude(rho_w):.3e}); "
                f"try w_index={best + 1}")
        self.point = SurfacePoint(self.coords, residual, rho_w)

    def _build(self):
        N, n, w = self.N, self.n, self.w
        rd = self.rho_d
        # first derivatives, frame coefficients and ambient Hessian
        self.d1 = [rd((j,)) for j in range(N)]
        self.d1b = [rd((N + k,)) for k in range(N)]
        inv_rw = self.d1[w].recip()
        self.vw = [-(self.d1[g] * inv_rw) for g in self.greek]
        self.vwb = [v.conj() for v in self.vw]
        self.G = [[rd((j, N + k)) for k in range(N)] for j in range(N)]
        # Levi matrix and its holomorphic companion
        self.h_jet = [[self.frame_deriv(rd, (), ((a, False), (b, True))) for b in range(n)]
                      for a in range(n)]
        self.hh_jet = [[self.frame_deriv(rd, (), ((a, False), (b, False))) for b in range(n)]
                       for a in range(n)]
        hv = self._values(self.h_jet)
        dh = det(hv)
        hnorm = max(magnitude(x) for row in hv for x in row)
        if magnitude(dh) <= self.tol.levi * max(hnorm, 1e-300) ** n:
            raise LeviDegenerate(f"|det h| = {magnitude(dh):.3e} at the point")
        self.h_inv_jet, _ = inverse(self.h_jet)
        # Fefferman determinant, xi, transverse curvature
        self.adjG = adjugate(self.G)
        self.detG = det(self.G)
        J = -(self.rho_jet.truncate(self.order - 2) * self.detG)
        for k in range(N):
            for j in range(N):
                J = J + self.d1b[k] * self.adjG[k][j] * self.d1[j]
        self.J_jet = J
        jscale = max(magnitude(x.value) for x in self.d1) ** 2 * max(1.0, magnitude(self.detG.value))
        if magnitude(J.value) <= self.tol.fefferman * max(jscale, 1e-300):
            raise FeffermanDegenerate("Levi-Fefferman determinant vanishes at the point")
        inv_J = J.recip()
        self.xi_jet = []
        for k in range(N):
            s = None
            for l in range(N):
                t = self.adjG[l][k] * self.d1b[l]
                s = t if s is None else s + t
            self.xi_jet.append(s * inv_J)
        self.xib_jet = [x.conj() for x in self.xi_jet]
        self.r_jet = self.detG * inv_J

    # -- helpers ---------------------------------------------------------------
    def _values(self, m):
        if isinstance(m, Jet):
            return m.value
        if isinstance(m, (list, tuple)):
            return [self._values(x) for x in m]
        return m

    def value_matrix(self, m):
        """Point values of a nested list of jets as an object array."""
        return np.array(self._values(m), dtype=object)

    def coef(self, a, barred, order):
        """Frame coefficient ``-rho_a/rho_w`` (or its conjugate) truncated to ``order``."""
        key = (a, barred, order)
        hit = self._coef_cache.get(key)
        if hit is None:
            src = self.vwb[a] if barred else self.vw[a]
            hit = src.truncate(order)
            self._coef_cache[key] = hit
        return hit

    def _coef_product(self, choices, order):
        key = (choices, order)
        hit = self._coef_cache.get(key)
        if hit is None:
            if len(choices) == 1:
                hit = self.coef(choices[0][0], choices[0][1], order)
            else:
                hit = self._coef_product(choices[:-1], order) * self.coef(choices[-1][0], choices[-1][1], order)
            self._coef_cache[key] = hit
        return hit

    def frame_deriv(self, oracle, fixed, slots):
        """Multilinear frame derivative.

        Computes ``sum over expansions of prod(frame coefficients) *
        d^{fixed + chosen} f`` where each slot ``(a, barred)`` contributes
        either ``d/dz_{greek[a]}`` or ``coef * d/dw`` (conjugated when
        barred).  This is D_{ab}, D_{a bbar}, the curly-R operator and so on,
        depending on ``slots``; ``fixed`` holds extra ambient derivatives.
        """
        N, w = self.N, self.w
        total = None
        for pick in cartesian((False, True), repeat=len(slots)):
            idx = list(fixed)
            chosen = []
            for (a, barred), use_w in zip(slots, pick):
                coord = w if use_w else self.greek[a]
                idx.append(coord + N if barred else coord)
                if use_w:
                    chosen.append((a, barred))
            d = oracle(tuple(idx))
            if chosen:
                d = d * self._coef_product(tuple(sorted(chosen)), d.order)
            total = d if total is None else total + d
        return total

    def zvec(self, f, a, barred=False):
        """Frame derivative ``Z_a f`` (or ``Z_abar f``) of a jet ``f``."""
        N, w = self.N, self.w
        if barred:
            return f.diff(self.greek[a] + N) + f.diff(w + N) * self.coef(a, True, f.order - 1)
        return f.diff(self.greek[a]) + f.diff(w) * self.coef(a, False, f.order - 1)

    def at_order(self, order):
        """Context at the same point with rho jets of order ``order``."""
        hit = self._higher.get(order)
        if hit is None:
            hit = FrameContext(self.surface, self.coords, self.backend, order, self.tol)
            hit._higher = self._higher
            hit.frame_tag = self.frame_tag
            self._higher[order] = hit
        return hit

    def cached(self, key, builder):
        hit = self._cache.get(key)
        if hit is None:
            hit = builder()
            self._cache[key] = hit
        return hit

    def jet_evaluator(self, order):
        return JetEvaluator(self.coords, order, self.backend)

    # -- point values ----------------------------------------------------------
    @property
    def h(self):
        return self.value_matrix(self.h_jet)

    @property
    def h_inv(self):
        return self.value_matrix(self.h_inv_jet)

    @property
    def h_hol(self):
        return self.value_matrix(self.hh_jet)

    @property
    def xi(self):
        return np.array([x.value for x in self.xi_jet], dtype=object)

    @property
    def r(self):
        return self.r_jet.value

    @property
    def J(self):
        return self.J_jet.value

    @property
    def d_rho2(self):
        """|d rho|^2 = rho^{j kbar} rho_j rho_kbar, or None when rho_{j kbar} is singular."""
        return self.cached("d_rho2", self._d_rho2)

    def _d_rho2(self):
        d = self.detG.value
        if magnitude(d) <= self.tol.matrix * max(1.0, magnitude(self.J)):
            return None
        return (self.J + self.rho_jet.value * d) / d

    @property
    def psi(self):
        return self.value_matrix(self.psi_jet)

    @property
    def psi_jet(self):
        def build():
            N = self.N
            one_minus_r = 1 - self.r_jet
            return [[self.G[j][k] + one_minus_r * self.d1[j] * self.d1b[k] for k in range(N)]
                    for j in range(N)]
        return self.cached("psi", build)

    @property
    def h_amb_jet(self):
        """``[k][j] -> h^{j kbar}``: inverse of psi minus xi^j conj(xi^k)."""
        def build():
            N = self.N
            pinv, _ = inverse(self.psi_jet)
            return [[pinv[k][j] - self.xi_jet[j] * self.xib_jet[k] for j in range(N)]
                    for k in range(N)]
        return self.cached("h_amb", build)

    @property
    def h_amb(self):
        return self.value_matrix(self.h_amb_jet)

    def greek_block(self, m):
        """Restrict an ambient ``N x N`` array to the Greek directions."""
        g = self.greek
        return np.array([[m[i][j] for j in g] for i in g], dtype=object)

    def __repr__(self):
        return f"FrameContext({self.surface.name}, order={self.order}, backend={self.backend.name})"


def context_build(surface, coords, backend=None, order=4, tol=DEFAULT_TOL):
    """Validate ``coords`` on ``surface`` and assemble the frame data.

    Raises
    ------
    OffSurface, FrameDegenerate, LeviDegenerate, FeffermanDegenerate
    """
    if order < 2:
        raise ValueError("jet order must be at least 2")
    return FrameContext(surface, coords, backend, order, tol)


def _field_oracle(ctx, f, order):
    f = lift(f, ctx.N)
    return DerivOracle(ctx.jet_evaluator(order).jet(f))


def d_mixed(ctx, f, a, b):
    """``D_{a bbar} f`` at the point (0-based Greek indices)."""
    return ctx.frame_deriv(_field_oracle(ctx, f, 2), (), ((a, False), (b, True))).value


def d_holo(ctx, f, a, b):
    """``D_{ab} f`` at the point."""
    return ctx.frame_deriv(_field_oracle(ctx, f, 2), (), ((a, False), (b, False))).value


def xi_and_r(ctx):
    """``(xi, r)`` with ``d rho(xi) = 1`` and ``xi -| i ddbar rho = i r dbar rho``."""
    return ctx.xi, ctx.r


def xi_residual(ctx):
    """Max-norm of ``sum_j xi^j rho_{j kbar} - r rho_kbar`` and of ``d rho(xi) - 1``."""
    N = ctx.N
    xi = ctx.xi
    res = 0.0
    for k in range(N):
        s = sum((xi[j] * ctx.G[j][k].value for j in range(N)), ctx.backend.coerce(0))
        res = max(res, magnitude(s - ctx.r * ctx.d1b[k].value))
    dxi = sum((ctx.d1[j].value * xi[j] for j in range(N)), ctx.backend.coerce(0))
    return max(res, magnitude(dxi - 1))


def fefferman_det(ctx):
    """J(rho) at the point."""
    return ctx.J


def ambient_inverse(ctx):
    """``h^{j kbar}`` as an ``N x N`` array indexed ``[k][j]``."""
    return ctx.h_amb


def bordered_hessian_det(ctx):
    """Independent J: minus the determinant of the full bordered matrix."""
    N = ctx.N
    m = [[ctx.rho_jet.value] + [ctx.d1b[k].value for k in range(N)]]
    for j in range(N):
        m.append([ctx.d1[j].value] + [ctx.G[j][k].value for k in range(N)])
    return -det(m)


def scaled(surface, c):
    """The same hypersurface defined by ``c * rho``."""
    return surface.with_rho(f_mul(lift(c, surface.N), surface.rho))


def squared_wrapper(surface, C):
    """The same hypersurface defined by ``rho + C rho^2``."""
    rho = surface.rho
    return surface.with_rho(f_add(rho, f_mul(lift(C, surface.N), rho, rho)))


__all__ = ["Hypersurface", "SurfacePoint", "FrameContext", "Tolerances", "context_build",
           "d_mixed", "d_holo", "xi_and_r", "xi_residual", "fefferman_det", "ambient_inverse",
           "bordered_hessian_det", "fefferman_field", "scaled", "squared_wrapper", "det",
           "adjugate", "inverse"]
