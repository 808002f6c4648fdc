"""Numba switch.

Hot kernels are compiled with numba unless ``GENAGENT_NUMBA`` is set to a
false value (``0``, ``false``, ``no``, ``off``) or numba is not importable,
in which case the vectorized numpy implementations are used instead.
"""
from __future__ import annotations

import os

_FALSE = {"0", "false", "no", "off"}

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("GENAGENT_NUMBA", "1").strip().lower() not in _FALSE


def njit(func):
    """Compile ``func`` in nopython mode when numba is available.

    The kernel is always compiled if numba imports, even when the numpy path
    is selected, so both routes stay testable side by side.
    """
    if not HAS_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)
