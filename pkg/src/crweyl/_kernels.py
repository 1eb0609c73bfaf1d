"""Hot loops for truncated power-series arithmetic.

The only kernel that matters for run time is the truncated product of two
coefficient vectors.  It comes in two flavours:

* a numba ``@njit`` loop over a precomputed pair table (complex128 only),
* a pure numpy gather/scatter that works for every dtype, including object
  arrays of ``gmpy2.mpc`` or exact Gaussian rationals.

Set ``CRWEYL_NUMBA=0`` in the environment to force the numpy path even when
numba is importable.  The choice is made once at import time; tests and the
benchmark flip it through :func:`set_numba`.
"""
import os

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    HAVE_NUMBA = False

_use_numba = HAVE_NUMBA and os.environ.get("CRWEYL_NUMBA", "1") not in ("0", "false", "no")


def numba_enabled():
    return _use_numba


def set_numba(flag):
    """Enable or disable the compiled kernels; returns the previous setting."""
    global _use_numba
    prev = _use_numba
    _use_numba = bool(flag) and HAVE_NUMBA
    return prev


if HAVE_NUMBA:
    @njit(cache=True, nogil=True)
    def _product_loop(a, b, ia, ib, it, npairs, out):
        for p in range(npairs):
            out[it[p]] += a[ia[p]] * b[ib[p]]
        return out

    @njit(cache=True, nogil=True)
    def _square_loop(a, ia, ib, it, npairs, out):
        # the table is symmetric, so ``a*a`` is the same loop with one operand
        for p in range(npairs):
            out[it[p]] += a[ia[p]] * a[ib[p]]
        return out


def product_numpy(a, b, ia, ib, it, starts, npairs, m):
    """Truncated product via gather + segmented sum.

    ``starts`` holds, for each output slot ``t < m``, the first pair index
    whose target is ``t``; pairs are sorted by target so a segmented
    reduction gives the result.
    """
    prods = a[ia[:npairs]] * b[ib[:npairs]]
    if a.dtype == object:
        return np.add.reduceat(prods, starts[:m])
    re = np.bincount(it[:npairs], weights=prods.real, minlength=m)
    im = np.bincount(it[:npairs], weights=prods.imag, minlength=m)
    return re + 1j * im


def truncated_product(a, b, ia, ib, it, starts, npairs, m):
    """Return the first ``m`` coefficients of ``a*b``.

    ``a`` and ``b`` must already be cut to length ``m``.  The pair table
    ``(ia, ib, it)`` is sorted by target and its first ``npairs`` entries are
    exactly the pairs landing below ``m``.
    """
    if _use_numba and a.dtype == np.complex128 and b.dtype == np.complex128:
        out = np.zeros(m, dtype=np.complex128)
        if a is b:
            return _square_loop(a, ia, ib, it, npairs, out)
        return _product_loop(a, b, ia, ib, it, npairs, out)
    return product_numpy(a, b, ia, ib, it, starts, npairs, m)
