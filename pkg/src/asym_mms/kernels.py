"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy
reference implementation.  Set ``ASYM_MMS_PURE_PYTHON=1`` to force the
fallback (the benchmark and the backend-agreement tests do this).
"""

import os

from . import _kernels_py

if os.environ.get("ASYM_MMS_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

floyd_warshall = _impl.floyd_warshall
neighbor_slopes = _impl.neighbor_slopes
hopf_lax = _impl.hopf_lax
smoothed_cheeger = _impl.smoothed_cheeger

__all__ = ["BACKEND", "floyd_warshall", "neighbor_slopes", "hopf_lax", "smoothed_cheeger"]
