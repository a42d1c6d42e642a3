"""Kernel backend selection.

The compiled extension `arcmig._kernels` is preferred when it imports;
otherwise the pure-NumPy twin is used.  Set ``ARCMIG_FORCE_PURE=1`` to
force the fallback (used by the benchmark and for debugging).
"""

import os

from . import _kernels_py

if os.environ.get("ARCMIG_FORCE_PURE", "") == "1":
    kernels = _kernels_py
    BACKEND = "pure"
else:
    try:
        from . import _kernels as _compiled

        kernels = _compiled
        BACKEND = "compiled"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "pure"
