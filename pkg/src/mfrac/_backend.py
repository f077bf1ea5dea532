"""Kernel backend selection.

The compiled extension is preferred.  Set ``MFRAC_BACKEND=python`` to force
the NumPy fallback (or ``cython`` to fail loudly when the extension is
missing).
"""

from __future__ import annotations

import os

from . import _fallback

_requested = os.environ.get("MFRAC_BACKEND", "auto").lower()

_core = None
if _requested in ("auto", "cython"):
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "cython":
            raise

BACKEND = "cython" if _core is not None else "python"

_threads = 1


def set_threads(n):
    """Parallelism for the compiled kernels; results do not depend on it."""
    global _threads
    _threads = max(1, int(n))


def get_threads():
    return _threads


def range_max(values, lo, hi):
    if _core is not None:
        return _core.range_max(values, lo, hi)
    return _fallback.range_max(values, lo, hi)


def mfi_contract(funcs, table, eval_coords, size, dim):
    if _core is not None and 1 <= len(funcs) <= 3:
        return _core.mfi_contract(funcs, table, eval_coords, size, dim, _threads)
    return _fallback.mfi_contract(funcs, table, eval_coords, size, dim)


def kernels(name):
    """Return the ``(range_max, mfi_contract)`` pair of one backend, for benchmarks."""
    if name == "python":
        return _fallback.range_max, _fallback.mfi_contract
    if _core is None:
        raise RuntimeError("compiled core is not available")
    return _core.range_max, (
        lambda f, t, x, s, d: _core.mfi_contract(f, t, x, s, d, _threads)
    )
