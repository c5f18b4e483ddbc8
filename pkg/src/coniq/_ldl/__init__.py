"""LDL' factorization backends.

The compiled core is preferred when the extension built; the pure-Python
reference kernel is the fallback and is also selectable explicitly by
setting CONIQ_PURE_LDL=1 (useful for debugging and for the backend
benchmark). Both expose identical ldl_factor/ldl_solve signatures and
produce bit-identical factors.
"""

from __future__ import annotations

import os

from . import fallback
from .symbolic import etree_and_counts, min_degree_order, permute_upper

if os.environ.get("CONIQ_PURE_LDL", "").strip() in ("1", "true", "yes"):
    _impl = fallback
    BACKEND = "python"
else:
    try:
        from . import core as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = fallback
        BACKEND = "python"

ldl_factor = _impl.ldl_factor
ldl_solve = _impl.ldl_solve

__all__ = [
    "BACKEND",
    "etree_and_counts",
    "fallback",
    "ldl_factor",
    "ldl_solve",
    "min_degree_order",
    "permute_upper",
]
