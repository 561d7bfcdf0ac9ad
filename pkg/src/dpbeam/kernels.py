"""Backend selection for the array-gain kernels.

The compiled extension is used for scattered points when importable; the
tensor-grid kernel defaults to NumPy, whose matrix products beat the
compiled loop beyond small grids (see ``benchmarks/bench_kernels.py``).
Set ``DPBEAM_PURE_PYTHON=1`` to force the NumPy fallback everywhere.
"""
import os

import numpy as np

from . import _kernels_py as python_backend

compiled_backend = None
if not os.environ.get("DPBEAM_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_impl = compiled_backend or python_backend
BACKEND = "cython" if compiled_backend is not None else "python"


def _args(e, psi_az, psi_el):
    return (np.ascontiguousarray(e, dtype=np.complex128),
            np.ascontiguousarray(np.ravel(psi_az), dtype=np.float64),
            np.ascontiguousarray(np.ravel(psi_el), dtype=np.float64))


def gain_points(e, psi_az, psi_el, impl=None):
    """Panel gain at point pairs; ``e`` is the ``m_h x m_v`` weight matrix."""
    return (impl or _impl).gain_points(*_args(e, psi_az, psi_el))


def gain_separable(e, psi_az, psi_el, impl=None):
    """Panel gain on the grid ``psi_az x psi_el``."""
    return (impl or python_backend).gain_separable(*_args(e, psi_az, psi_el))
