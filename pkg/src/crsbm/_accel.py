"""Numba acceleration shim.

Hot kernels are written as plain Python functions over numpy arrays and
compiled with ``numba.njit`` when available.  Setting the environment
variable ``CRSBM_NUMBA=0`` (or ``off``/``false``/``no``) selects the
uncompiled pure-numpy path instead; ``CRSBM_NUMBA=1`` requires numba and
raises if it cannot be imported.  The two paths run the same source, so
they produce identical results.
"""

import os

_FALSY = ("0", "off", "false", "no")
_TRUTHY = ("1", "on", "true", "yes")


def _resolve_flag() -> bool:
    flag = os.environ.get("CRSBM_NUMBA", "").strip().lower()
    if flag in _FALSY:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        if flag in _TRUTHY:
            raise ImportError("CRSBM_NUMBA=1 but numba is not installed")
        return False
    return True


NUMBA_ENABLED = _resolve_flag()

if NUMBA_ENABLED:
    from numba import njit
else:
    def njit(*args, **kwargs):
        """No-op stand-in for numba.njit."""
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap
