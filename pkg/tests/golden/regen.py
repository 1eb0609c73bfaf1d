"""Rewrite the report snapshots: ``python -m tests.golden.regen`` from the repo root.

Only run this after a deliberate change to the report layout or values.
"""
import json
from pathlib import Path

from crweyl.backend import get_backend
from crweyl.catalog import CATALOG
from crweyl.report import compute_report

HERE = Path(__file__).parent
SHOW = ("h", "A", "Ric", "rscal", "S", "norm_s2", "X", "x_norm", "i_prime", "div_x")


def snapshot(name, backend):
    entry = CATALOG[name]
    params = dict(entry.defaults)
    surface = entry.build(params)
    rep = compute_report(surface, entry.sample_point(params, backend), backend, show=SHOW)
    d = rep.to_dict()
    return {"values": d["values"], "notes": d["notes"]}


def main():
    mp = get_backend("float", 128)
    for name in CATALOG:
        (HERE / f"{name}.json").write_text(json.dumps(snapshot(name, mp), indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
