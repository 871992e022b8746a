"""JIT switch.

Hot kernels are written twice: a numba ``@njit`` loop version and a plain
numpy version.  ``KSTEINER_DISABLE_NUMBA=1`` (or a missing numba install)
selects the numpy path everywhere.
"""
import os

_FLAG = os.environ.get("KSTEINER_DISABLE_NUMBA", "").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, else a no-op decorator.

    The decorated function is always compiled when numba exists (so the
    benchmark can compare both paths); ``USE_NUMBA`` only controls dispatch.
    """
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
