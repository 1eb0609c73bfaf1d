"""The ``crweyl`` command line: eval, scan, verify and exit codes."""
import csv
import io
import json
import shutil
import subprocess
from fractions import Fraction

import gmpy2
import pytest

from crweyl.backend import get_backend
from crweyl.catalog import e_norm_s2
from crweyl.cli import main, parse_grid
from crweyl.errors import BadGridSpec

E_HALF = ["--surface", "ellipsoid-rev:a=1/2"]
P0 = ["--point", "sqrt(1/2), 0, 1i"]


def run(*argv):
    out = io.StringIO()
    try:
        code = main(list(argv), out)
    except SystemExit as exc:
        code = exc.code
    return code, out.getvalue()


def values(text):
    return {k: complex(float(v["re"]), float(v["im"])) for k, v in json.loads(text)["values"].items()}


# -- eval -------------------------------------------------------------------

def test_eval_sphere_has_no_tracefree_curvature():
    code, text = run("eval", "--surface", "sphere:n=2", "--point", "0,0,1", "--show", "S,norm_s2")
    assert code == 0
    v = values(text)
    assert max(abs(x) for k, x in v.items() if k.startswith("S_")) < 1e-35
    assert abs(v["norm_s2"]) < 1e-35


def test_eval_tube_i_prime():
    code, text = run("eval", "--surface", "tube:n=2", "--point-seed", "1/2, 1/3i, 1", "--show", "Iprime")
    assert code == 0
    d = json.loads(text)
    assert d["notes"]["scale"] == "theta"
    assert abs(values(text)["i_prime"] - 1 / 9) < 1e-30


def test_eval_ellipsoid_x_at_p0():
    code, text = run("eval", *E_HALF, *P0, "--show", "X,x_norm,div_x")
    assert code == 0
    v = values(text)
    assert abs(v["X_{1}"].real - 6.7201e-3) < 1e-7
    assert abs(v["X_{2}"]) < 1e-35
    assert v["x_norm"].real > 0


def test_eval_csv_format():
    code, text = run("eval", *E_HALF, *P0, "--show", "h,J", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["key", "re", "im"]
    keyed = {r[0]: r[1:] for r in rows[1:]}
    assert float(keyed["h_{1 1bar}"][0]) == pytest.approx(3)
    assert float(keyed["J"][0]) == pytest.approx(0.75)


def test_eval_exact_backend_prints_rationals():
    code, text = run("eval", "--surface", "sphere:n=2", "--point", "3/5, 0, 4/5i", "--backend", "exact",
                     "--show", "h")
    assert code == 0
    d = json.loads(text)
    assert d["backend"]["kind"] == "exact"
    assert all("." not in v[part] for v in d["values"].values() for part in ("re", "im"))


def test_domain_error_is_json_with_exit_2():
    code, text = run("eval", "--surface", "sphere:n=2", "--point", "0,0,0")
    assert code == 2
    err = json.loads(text)["error"]
    assert err["code"] == "OffSurface" and err["module"] and err["message"]


def test_frame_degenerate_reports_hint():
    code, text = run("eval", "--surface", "sphere:n=2", "--point", "1,0,0")
    assert code == 2
    assert "w_index=1" in json.loads(text)["error"]["message"]
    assert run("eval", "--surface", "sphere:n=2", "--point", "1,0,0", "--w-index", "1", "--show", "h")[0] == 0


@pytest.mark.parametrize("argv", [
    ["eval", "--surface", "sphere:n=2"],                                   # no point
    ["eval", "--surface", "sphere:n=2", "--point", "0,0,1", "--point-seed", "0,0,2"],
    ["eval", "--surface", "sphere:n=2", "--point", "0,0,1", "--show", "nonsense"],
    ["eval", "--surface", "sphere:n", "--point", "0,0,1"],
    ["frobnicate"],
])
def test_usage_errors_exit_3(argv, capsys):
    assert run(*argv)[0] == 3


def test_unknown_surface_is_a_domain_error():
    code, text = run("eval", "--surface", "torus", "--point", "0,0,1")
    assert code == 2 and json.loads(text)["error"]["code"] == "UnknownSurface"


def test_rho_expression_surface():
    code, text = run("eval", "--rho", "z1*conj(z1) + z2*conj(z2) + z3*conj(z3) - 1", "--nvars", "3",
                     "--point", "0,0,1", "--show", "norm_s2")
    assert code == 0 and abs(values(text)["norm_s2"]) < 1e-35


# -- scan -------------------------------------------------------------------

def scan(*argv):
    code, text = run("scan", *argv)
    return code, list(csv.DictReader(io.StringIO(text)))


def test_parse_grid_is_exact():
    (name, vals), = parse_grid(["t=0:1:5"])
    assert name == "t" and vals == [Fraction(k, 4) for k in range(5)]
    for bad in (["t=0:1"], ["t=0:x:3"], ["t=0:1:0"], ["t=0:1:2", "t=1:2:2"]):
        with pytest.raises(BadGridSpec):
            parse_grid(bad)


def test_scan_sphere_is_flat():
    code, rows = scan("--surface", "sphere:n=2", "--point-seed", "{t}, 0, 1", "--grid", "t=0:1:4")
    assert code == 0 and len(rows) == 4
    assert all(r["status"] == "ok" and abs(float(r["norm_s2"])) < 1e-30 for r in rows)
    assert [float(r["t"]) for r in rows] == [0, 1 / 3, 2 / 3, 1]


def test_scan_ellipsoid_along_imaginary_w_matches_closed_form():
    MP = get_backend("float", 128)
    MP.activate()
    code, rows = scan(*E_HALF, "--point-seed", "1, 0, {s}i", "--ray", "z", "--grid", "s=0:1/2:6")
    assert code == 0
    assert rows[0]["status"] == "FrameDegenerate"  # rho_w vanishes at w = 0
    assert rows[0]["z1_re"]                         # the placed point is still listed
    for r in rows[1:]:
        assert r["status"] == "ok"
        z = (gmpy2.mpc(gmpy2.mpfr(r["z1_re"]), gmpy2.mpfr(r["z1_im"])),
             gmpy2.mpc(gmpy2.mpfr(r["z2_re"]), gmpy2.mpfr(r["z2_im"])))
        w = gmpy2.mpc(gmpy2.mpfr(r["z3_re"]), gmpy2.mpfr(r["z3_im"]))
        want = e_norm_s2(Fraction(1, 2), z, w)
        assert abs(gmpy2.mpfr(r["norm_s2"]) - want.real) < 1e-25 * max(1, abs(want))


def test_scan_tube_is_constant():
    code, rows = scan("--surface", "tube:n=2", "--point-seed", "{x}, 1/3i, 1", "--grid", "x=-1:1:3",
                      "--format", "csv")
    assert code == 0
    assert all(abs(float(r["norm_s2"]) - 2 / 3) < 1e-15 for r in rows)
    assert all(abs(float(r["i_prime"]) - 1 / 9) < 1e-15 for r in rows)


def test_scan_columns_and_two_grids():
    code, rows = scan("--surface", "sphere:n=2", "--point-seed", "{a}, {b}i, 1", "--grid", "a=0:1:2",
                      "--grid", "b=0:1:3")
    assert code == 0 and len(rows) == 6
    assert list(rows[0])[:3] == ["index", "a", "b"]
    assert list(rows[0])[-1] == "status"
    assert {"z3_re", "x_norm", "i_prime_im", "rho_residual"} <= set(rows[0])


def test_scan_parallel_keeps_grid_order():
    argv = ("--surface", "ellipsoid-rev:a=1/3", "--point-seed", "{t}, 1/5, 1/2i", "--grid", "t=1/10:1:5")
    serial = scan(*argv)[1]
    parallel = scan(*argv, "--jobs", "3")[1]
    assert serial == parallel
    assert [r["index"] for r in parallel] == [str(k) for k in range(5)]


def test_scan_json_lines():
    code, text = run("scan", "--surface", "sphere:n=2", "--point-seed", "{t}, 0, 1", "--grid", "t=0:1:2",
                     "--format", "json")
    assert code == 0
    assert [json.loads(line)["index"] for line in text.splitlines()] == [0, 1]


@pytest.mark.parametrize("grid,point", [("t=0:1", "{t},0,1"), ("t=0:1:2", "0,0,1"), ("t=0:1:2", "{t},{u},1")])
def test_bad_grid_is_a_domain_error(grid, point):
    code, text = run("scan", "--surface", "sphere:n=2", "--point-seed", point, "--grid", grid)
    assert code == 2 and json.loads(text)["error"]["code"] == "BadGridSpec"


def test_scan_rejects_zero_jobs():
    assert run("scan", "--surface", "sphere:n=2", "--point-seed", "{t},0,1", "--grid", "t=0:1:2",
               "--jobs", "0")[0] == 3


# -- verify -----------------------------------------------------------------

def test_verify_list():
    code, text = run("verify", "--list")
    assert code == 0 and len(text.splitlines()) == 15


def test_verify_selected_criteria_as_json_lines():
    code, text = run("verify", "--only", "gauss,rho-squared")
    lines = [json.loads(x) for x in text.splitlines()]
    assert [d["id"] for d in lines] == [9, 10]
    assert all(d["passed"] for d in lines) and code == 0


def test_verify_exits_1_when_a_criterion_fails():
    code, text = run("verify", "--only", "6")
    d = json.loads(text)
    assert code == 1 and not d["passed"]
    assert any(not s["ok"] for s in d["subchecks"])


def test_verify_unknown_selector():
    assert run("verify", "--only", "nope")[0] == 3


@pytest.mark.skipif(shutil.which("crweyl") is None, reason="console script not installed")
def test_console_script():
    p = subprocess.run(["crweyl", "eval", "--surface", "sphere:n=2", "--point", "0,0,1", "--show", "rscal"],
                       capture_output=True, text=True, timeout=120)
    assert p.returncode == 0
    assert abs(values(p.stdout)["rscal"] - 6) < 1e-30  # R = n(n+1) on the unit sphere, n = 2
