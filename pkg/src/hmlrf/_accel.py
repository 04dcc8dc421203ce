"""Numba dispatch.

Kernels are written once as plain loops and compiled with ``njit`` when numba
is importable. Setting ``HMLRF_DISABLE_NUMBA=1`` forces the vectorised numpy
implementations instead (useful for debugging and for the backend benchmark).
"""
import os

_DISABLED = os.environ.get("HMLRF_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(func):
    """Compile ``func`` in nopython mode, or return it untouched without numba."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend():
    return "numba" if USE_NUMBA else "numpy"
