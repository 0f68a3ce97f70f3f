"""Kernel selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``DPFL_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("DPFL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

uniforms = _impl.uniforms
sample_pieces = _impl.sample_pieces
shifted_score = _impl.shifted_score

__all__ = ["BACKEND", "uniforms", "sample_pieces", "shifted_score"]
