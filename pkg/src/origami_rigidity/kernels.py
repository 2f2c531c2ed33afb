"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set ``ORIGAMI_RIGIDITY_PURE_PYTHON=1`` before import to force the numpy
fallback.  ``BACKEND`` names the implementation in use.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("ORIGAMI_RIGIDITY_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

chain_products = _impl.chain_products
hessian_blocks = _impl.hessian_blocks
refine_zero_set = _impl.refine_zero_set

__all__ = ["BACKEND", "chain_products", "hessian_blocks", "refine_zero_set"]
