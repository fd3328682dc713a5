"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``CORRSIR_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is used.
"""
from __future__ import annotations

import os

from . import _kernels_py

_force_pure = os.environ.get("CORRSIR_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure-python backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"

mgf_tensor_sum = _compiled.mgf_tensor_sum if _compiled is not None else _kernels_py.mgf_tensor_sum

__all__ = ["BACKEND", "mgf_tensor_sum"]
