"""Numba switch for the hot kernels.

Set ``VERIFIER_NO_NUMBA=1`` to force the pure-numpy path. Numba is also
skipped when it cannot be imported.
"""
import os

_DISABLED = os.environ.get("VERIFIER_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

HAVE_NUMBA = False
if not _DISABLED:
    try:
        import numba

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass


def jit(fn):
    """Compile ``fn`` with ``numba.njit(cache=True)``; identity when numba is off."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
