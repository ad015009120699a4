"""Numba toggle.

Set ``REACHCERT_DISABLE_NUMBA=1`` to force the pure-numpy kernels.  When numba
is not importable the numpy path is used automatically.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("REACHCERT_DISABLE_NUMBA", "").strip().lower()

try:  # pragma: no cover - depends on the environment
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

USE_NUMBA: bool = _numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if _numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
