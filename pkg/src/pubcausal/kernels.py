"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set ``PUBCAUSAL_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("PUBCAUSAL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

grow_tree = _impl.grow_tree
greedy_match = _impl.greedy_match
ccdr_cd = _impl.ccdr_cd
predict_tree = _kernels_py.predict_tree

__all__ = ["BACKEND", "grow_tree", "greedy_match", "ccdr_cd", "predict_tree"]
