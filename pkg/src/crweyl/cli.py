"""Command line interface: ``crweyl eval | scan | verify``.

Exit codes: 0 success, 2 domain error (a JSON object ``{code, message,
module}`` on stdout), 3 usage error; ``verify`` exits 1 when a check fails.
"""
import argparse
import csv
import io
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from itertools import product as cartesian

from . import __version__
from .backend import get_backend, re_part
from .catalog import build_surface, parse_number, parse_point, point_place
from .errors import BadGridSpec, CRWeylError
from .frame import DEFAULT_TOL, Hypersurface
from .report import DEFAULT_SHOW, canonical_show, compute_report, encode

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 2, 3
SCAN_SHOW = ("norm_s2", "x_norm", "i_prime", "residuals")
RESIDUAL_COLUMNS = ("gauss_curvature_residual", "gauss_torsion_residual",
                    "characteristic_residual", "rho_residual")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for domain errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_surface_args(p):
    g = p.add_argument_group("surface")
    g.add_argument("--surface", metavar="NAME:k=v,...",
                   help="catalog surface, e.g. ellipsoid-rev:a=1/2")
    g.add_argument("--rho", metavar="EXPR", help="defining polynomial in z1..zN and conj(zj)")
    g.add_argument("--nvars", type=int, metavar="N", help="number of complex variables for --rho")
    g.add_argument("--w-index", type=int, metavar="J", help="1-based distinguished coordinate")
    g = p.add_argument_group("numerics")
    g.add_argument("--backend", choices=("float", "exact"), default="float")
    g.add_argument("--precision", type=int, metavar="BITS",
                   help="float precision (default $CRWEYL_PRECISION or 128)")
    g.add_argument("--scale", choices=("auto", "pe", "theta"), default="auto",
                   help="contact form for X, I' and div X (default: theta if pseudo-Einstein)")
    g.add_argument("--tol-surface", type=float, default=DEFAULT_TOL.on_surface)
    g.add_argument("--tol-frame", type=float, default=DEFAULT_TOL.frame)
    g.add_argument("--tol-levi", type=float, default=DEFAULT_TOL.levi)


def _add_point_args(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--point", metavar="LIST", help="point on M, e.g. 'sqrt(1/2),0,1i'")
    g.add_argument("--point-seed", metavar="LIST", help="seed moved onto M along --ray")
    p.add_argument("--ray", default="radial", metavar="radial|w|z|LIST",
                   help="direction used with --point-seed")


def build_parser():
    p = _Parser(prog="crweyl", description="CR invariants of real hypersurfaces from a defining function")
    p.add_argument("--version", action="version", version=f"crweyl {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", help="invariants at one point")
    _add_surface_args(e)
    _add_point_args(e)
    e.add_argument("--show", default=",".join(DEFAULT_SHOW), metavar="LIST")
    e.add_argument("--format", choices=("json", "csv"), default="json")

    s = sub.add_parser("scan", help="invariants over a parametric family of points")
    _add_surface_args(s)
    _add_point_args(s)
    s.add_argument("--grid", action="append", required=True, metavar="NAME=LO:HI:COUNT",
                   help="grid variable substituted for {NAME} in the point text; repeatable")
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    s.add_argument("--format", choices=("csv", "json"), default="csv")

    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--only", metavar="LIST", help="criterion ids, keys or tags")
    v.add_argument("--backend", choices=("float", "exact"), default="float")
    v.add_argument("--precision", type=int, metavar="BITS")
    v.add_argument("--seed", type=int)
    v.add_argument("--list", action="store_true", help="list criteria and exit")
    return p


# ---------------------------------------------------------------------------
# shared plumbing


def _surface(args):
    if args.surface and args.rho:
        raise UsageError("give either --surface or --rho, not both")
    if args.surface:
        surface, entry, params = build_surface(args.surface)
        if args.w_index is not None:
            surface = surface.with_w_index(args.w_index)
        info = {"name": entry.name, "params": {k: str(v) for k, v in params.items()}}
        return surface, info
    if args.rho:
        if args.nvars is None:
            raise UsageError("--rho needs --nvars")
        surface = Hypersurface(args.rho, args.nvars - 1, args.w_index, name="custom")
        return surface, {"name": "custom", "rho": args.rho}
    raise UsageError("give --surface or --rho")


def _backend(args):
    return get_backend(args.backend, args.precision)


def _tol(args):
    from dataclasses import replace
    return replace(DEFAULT_TOL, on_surface=args.tol_surface, frame=args.tol_frame, levi=args.tol_levi)


def _ray(text, backend):
    text = text.strip()
    if text in ("radial", "w", "z"):
        return text
    return parse_point(text, backend)


def _place(surface, text, seeded, ray, backend):
    coords = parse_point(text, backend)
    if len(coords) != surface.N:
        raise UsageError(f"point has {len(coords)} coordinates, surface needs {surface.N}")
    if seeded:
        coords = point_place(surface, coords, _ray(ray, backend), backend)
    return coords


def _report(surface, info, text, seeded, args, show):
    backend = _backend(args)
    coords = _place(surface, text, seeded, args.ray, backend)
    return compute_report(surface, coords, backend, show=show, scale=args.scale,
                          surface_info=info, tol=_tol(args))


def _domain_error(exc, out):
    out.write(json.dumps({"error": exc.to_dict()}) + "\n")
    return EXIT_DOMAIN


# ---------------------------------------------------------------------------
# eval


def report_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "re", "im"])
    for k, v in report.values.items():
        e = encode(v)
        w.writerow([k, e["re"], e["im"]])
    return buf.getvalue()


def cmd_eval(args, out):
    surface, info = _surface(args)
    show = canonical_show(args.show.split(","))
    text = args.point if args.point is not None else args.point_seed
    rep = _report(surface, info, text, args.point is None, args, show)
    out.write(rep.to_json() + "\n" if args.format == "json" else report_csv(rep))
    return EXIT_OK


# ---------------------------------------------------------------------------
# scan

_GRID = re.compile(r"^\s*([A-Za-z_]\w*)\s*=\s*([^:]+):([^:]+):\s*(\d+)\s*$")


def parse_grid(specs):
    """``["t=0:1.2:13", ...]`` -> ``[(name, [values...]), ...]`` with exact values.

    Raises
    ------
    BadGridSpec
    """
    grids = []
    for spec in specs:
        m = _GRID.match(spec)
        if not m:
            raise BadGridSpec(f"grid {spec!r} is not NAME=LO:HI:COUNT")
        name, lo, hi, count = m.group(1), m.group(2), m.group(3), int(m.group(4))
        try:
            lo, hi = Fraction(parse_number(lo)), Fraction(parse_number(hi))
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise BadGridSpec(f"grid {spec!r}: endpoints must be rational ({exc})") from None
        if count < 1:
            raise BadGridSpec(f"grid {spec!r}: COUNT must be positive")
        if any(name == g[0] for g in grids):
            raise BadGridSpec(f"grid variable {name!r} given twice")
        step = (hi - lo) / (count - 1) if count > 1 else Fraction(0)
        grids.append((name, [lo + k * step for k in range(count)]))
    return grids


def _literal(q):
    return f"({q.numerator}/{q.denominator})" if q.denominator != 1 else f"({q.numerator})"


def grid_points(template, grids):
    """Substitute every grid combination into ``template``; yields (values, text)."""
    names = [g[0] for g in grids]
    for combo in cartesian(*(g[1] for g in grids)):
        text = template
        for name, q in zip(names, combo):
            text = text.replace("{" + name + "}", _literal(q))
        if "{" in text:
            raise BadGridSpec(f"point template has an unbound placeholder: {text!r}")
        yield dict(zip(names, combo)), text


def _scan_row(job):
    index, values, text, args = job
    row = {"index": index, **{k: float(v) for k, v in values.items()}}
    try:
        surface, info = _surface(args)
        backend = _backend(args)
        coords = _place(surface, text, args.point is None, args.ray, backend)
        for j, c in enumerate(coords):
            e = encode(c)
            row[f"z{j + 1}_re"], row[f"z{j + 1}_im"] = e["re"], e["im"]
        rep = compute_report(surface, coords, backend, show=SCAN_SHOW, scale=args.scale,
                             surface_info=info, tol=_tol(args))
    except CRWeylError as exc:
        # failed frame conditions are flagged in the row, never dropped
        row["status"] = exc.code
        return row
    for k in ("norm_s2", "x_norm") + RESIDUAL_COLUMNS:
        if k in rep.values:
            row[k] = encode(re_part(rep.values[k]))["re"]
    if "i_prime" in rep.values:
        e = encode(rep.values["i_prime"])
        row["i_prime"], row["i_prime_im"] = e["re"], e["im"]
    row["status"] = "ok"
    return row


def scan_columns(names, N):
    coords = [f"z{j + 1}_{part}" for j in range(N) for part in ("re", "im")]
    return (["index", *names, *coords, "norm_s2", "x_norm", "i_prime", "i_prime_im",
             *RESIDUAL_COLUMNS, "status"])


def scan_rows(args, jobs=1):
    surface, _ = _surface(args)
    grids = parse_grid(args.grid)
    template = args.point if args.point is not None else args.point_seed
    if not any("{" + g[0] + "}" in template for g in grids):
        raise BadGridSpec("point template uses none of the grid variables")
    work = [(i, vals, text, args) for i, (vals, text) in enumerate(grid_points(template, grids))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_scan_row, work))  # map keeps grid order
    else:
        rows = [_scan_row(w) for w in work]
    return [g[0] for g in grids], surface.N, rows


def cmd_scan(args, out):
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    names, N, rows = scan_rows(args, args.jobs)
    if args.format == "json":
        for r in rows:
            out.write(json.dumps(r) + "\n")
        return EXIT_OK
    w = csv.DictWriter(out, fieldnames=scan_columns(names, N), restval="", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args, out):
    from . import verify
    if args.list:
        for c in verify.CRITERIA:
            out.write(f"{c.id:2d}  {c.key:20s} [{','.join(c.tags)}]  {c.title}\n")
        return EXIT_OK
    only = [x for x in args.only.split(",")] if args.only else None
    try:
        verify.select(only)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    seed = verify.DEFAULT_SEED if args.seed is None else args.seed
    results = verify.run(only, _backend(args), seed, stream=out)
    return EXIT_OK if all(r.passed for r in results) else 1


COMMANDS = {"eval": cmd_eval, "scan": cmd_scan, "verify": cmd_verify}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.exit(EXIT_USAGE, f"crweyl: error: {exc}\n")
    except CRWeylError as exc:
        return _domain_error(exc, out)
    except ValueError as exc:
        # malformed literals and parameters are the caller's fault
        parser.exit(EXIT_USAGE, f"crweyl: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
