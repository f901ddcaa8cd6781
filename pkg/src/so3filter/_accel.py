"""JIT switch.

Kernels are decorated with :func:`jit`. When numba is importable and the
environment variable ``SO3FILTER_DISABLE_JIT`` is unset (or ``0``), they are
compiled with ``numba.njit``; otherwise the very same functions run as plain
numpy code. Both paths execute identical source.
"""

import os

ENV_FLAG = "SO3FILTER_DISABLE_JIT"


def flag_disabled(value) -> bool:
    """Interpret the environment flag; empty, ``0``, ``false`` and ``no`` keep the JIT on."""
    return (value or "").strip().lower() not in ("", "0", "false", "no")


JIT_DISABLED = flag_disabled(os.environ.get(ENV_FLAG))

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

JIT_ENABLED = numba is not None and not JIT_DISABLED


def jit(fn):
    if JIT_ENABLED:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn
