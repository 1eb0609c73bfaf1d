"""Package-wide switches.

``DELTA_B`` fixes the sign convention of the sub-Laplacian.  It is pinned by
the conformal transformation law of the I' invariant (see
``tests/test_invariants.py``): only one choice makes that law hold.  The
environment variable ``CRWEYL_DELTA_B`` overrides it for experiments.
"""
import os

DELTA_B_CONVENTIONS = ("negative-sum", "positive-sum")

DELTA_B = os.environ.get("CRWEYL_DELTA_B", "positive-sum")
if DELTA_B not in DELTA_B_CONVENTIONS:
    raise ValueError(f"CRWEYL_DELTA_B must be one of {DELTA_B_CONVENTIONS}")
