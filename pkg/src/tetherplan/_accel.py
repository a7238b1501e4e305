"""JIT selection.

Set ``TETHERPLAN_NO_JIT=1`` to force the pure-numpy kernels (useful when
numba is missing or when debugging the kernels in plain Python).
"""
import os

_FLAG = os.environ.get("TETHERPLAN_NO_JIT", "").strip().lower()

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _njit = None
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` with numba when available, else return it untouched."""
    if not HAVE_NUMBA:
        return func
    return _njit(cache=True, nogil=True)(func)
