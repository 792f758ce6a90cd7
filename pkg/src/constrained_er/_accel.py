"""Backend selection for the hot kernels.

Kernels are compiled with numba unless ``CONSTRAINED_ER_DISABLE_NUMBA`` is set
to a truthy value or numba cannot be imported, in which case the numpy /
pure-Python implementations are used. Both paths return identical results.
"""

from __future__ import annotations

import os

_FLAG = "CONSTRAINED_ER_DISABLE_NUMBA"

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get(_FLAG, "").lower() not in ("1", "true", "yes", "on")


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is available, else return it."""
    if not HAVE_NUMBA:
        return fn
    return _numba.njit(cache=True, nogil=True)(fn)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
