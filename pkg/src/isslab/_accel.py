"""Backend selection for the hot numeric kernels.

Numba is used when importable unless ``ISSLAB_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel runs its pure-numpy twin.  The
choice is made once, at import time.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested():
    return os.environ.get("ISSLAB_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    if not _numba_requested():
        raise ImportError("numba disabled by ISSLAB_DISABLE_NUMBA")
    from numba import njit as _njit

    USE_NUMBA = True
except ImportError:
    USE_NUMBA = False
    _njit = None


def njit(fn):
    """Compile ``fn`` with numba when enabled; otherwise return it unchanged."""
    if USE_NUMBA:
        return _njit(cache=True)(fn)
    return fn


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
