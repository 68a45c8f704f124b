"""Backend selection for the numeric kernels.

Set ``AIMOLE_DISABLE_NUMBA=1`` before import to force the pure-numpy path.
"""
import os

_FLAG = "AIMOLE_DISABLE_NUMBA"


def numba_requested():
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


def numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = numba_requested() and numba_available()

if USE_NUMBA:
    from . import _kernels_numba as kernels
else:
    from . import _kernels_numpy as kernels

BACKEND = "numba" if USE_NUMBA else "numpy"

__all__ = ["kernels", "BACKEND", "USE_NUMBA"]
