"""Selects the compiled bath-sum kernel, falling back to numpy.

Set TOPOFANO_PURE_PYTHON=1 to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
bath_sums = _kernels_py.bath_sums

if not os.environ.get("TOPOFANO_PURE_PYTHON"):
    try:
        from . import _kernels_cy
    except ImportError:
        pass
    else:
        bath_sums = _kernels_cy.bath_sums
        BACKEND = "cython"

__all__ = ["bath_sums", "BACKEND"]
