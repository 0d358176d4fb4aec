"""Numba switch.

Hot kernels are written once in the numba-compatible subset of Python and
compiled with ``njit`` unless ``SIRMF_DISABLE_NUMBA=1`` is set (or numba is
not importable). Every kernel also has a vectorized numpy counterpart; the
flag decides which one the solvers call by default.
"""

from __future__ import annotations

import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("SIRMF_DISABLE_NUMBA", "").strip().lower() in _FALSY


def njit(func):
    """``numba.njit(cache=True)`` when numba is available, else identity."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    return func
