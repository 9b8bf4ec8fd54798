"""Numba switch.

Hot kernels are decorated with :func:`njit`. When numba is missing, or the
environment variable ``TGRAND_DISABLE_NUMBA`` is set to anything other than
``""``/``"0"``, the decorator is the identity and the same source runs as
plain Python over numpy arrays.
"""

from __future__ import annotations

import os

_flag = os.environ.get("TGRAND_DISABLE_NUMBA", "")
DISABLED = _flag not in ("", "0")

try:
    if DISABLED:
        raise ImportError
    import numba as _numba
except ImportError:
    _numba = None

USING_NUMBA = _numba is not None


def njit(*args, **kwargs):
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if len(args) == 1 and callable(args[0]):
        return _numba.njit(**kwargs)(args[0])
    return _numba.njit(*args, **kwargs)


def py_func(f):
    """Return the undecorated Python function behind a kernel."""
    return getattr(f, "py_func", f)
