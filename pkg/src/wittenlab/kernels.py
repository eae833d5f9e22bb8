"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
twin in ``_fallback`` is used. Set ``WITTENLAB_PURE_PYTHON=1`` to force the
fallback (used by the benchmark and by the backend-equivalence tests).
"""
import os

from . import _fallback

BACKEND = "python"
if os.environ.get("WITTENLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

reduce_gf2 = _impl.reduce_gf2
jacobi_sweeps = _impl.jacobi_sweeps

__all__ = ["BACKEND", "reduce_gf2", "jacobi_sweeps"]
