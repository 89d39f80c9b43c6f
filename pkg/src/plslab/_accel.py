"""Numba switch.

Set ``PLSLAB_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The flag is
read once, at import time.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_DISABLED = os.environ.get("PLSLAB_DISABLE_NUMBA", "").strip().lower() not in _FALSY
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED

NUMBA_OPTS = {"cache": True, "nogil": True}


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(func, **NUMBA_OPTS)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
