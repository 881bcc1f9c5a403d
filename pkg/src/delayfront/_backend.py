"""Kernel backend selection: compiled extension if importable, else pure Python.

Set DELAYFRONT_PURE_PYTHON=1 to force the fallback.
"""
import os

from ._kernels_py import DONE, ESCAPE_DOWN, ESCAPE_UP  # noqa: F401

if os.environ.get("DELAYFRONT_PURE_PYTHON"):
    from . import _kernels_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels
        BACKEND = "python"
