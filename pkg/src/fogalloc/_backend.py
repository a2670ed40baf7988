"""Kernel backend selection.

Hot loops are written twice: a numba ``@njit`` version and a vectorised
numpy version. ``FOGALLOC_BACKEND=numpy`` forces the numpy path (also used
automatically when numba cannot be imported). Any other value, or unset,
selects numba.
"""

from __future__ import annotations

import os

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None
    HAVE_NUMBA = False

_requested = os.environ.get("FOGALLOC_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"FOGALLOC_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or an identity decorator without numba."""
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda func: func
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return nb.njit(*args, **kwargs)


if HAVE_NUMBA:
    prange = nb.prange
else:  # pragma: no cover
    prange = range


def pick(numba_impl, numpy_impl):
    """Return the implementation matching the active backend."""
    return numba_impl if BACKEND == "numba" else numpy_impl
