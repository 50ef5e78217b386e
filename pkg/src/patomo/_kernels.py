"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
versions are used.  Setting ``PATOMO_PURE_PYTHON=1`` forces the fallback.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("PATOMO_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ext as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def get_backend(name=None):
    """Return the kernel module for ``name`` (``"python"``, ``"cython"`` or the active one)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ext
        return _ext
    raise ValueError(f"unknown backend {name!r}")


def trace_rays(n, offsets, angles_rad, backend=None):
    return get_backend(backend).trace_rays(int(n), offsets, angles_rad)


def _apply_stencil(fn_name, x, coeffs, axis, backend):
    impl = get_backend(backend)
    x = np.asarray(x, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if impl is _pykernels or x.ndim > 2:
        return getattr(_pykernels, fn_name)(x, coeffs, axis)
    if x.ndim == 1:
        return getattr(impl, fn_name)(x[None, :], coeffs, 1)[0]
    return getattr(impl, fn_name)(x, coeffs, axis % 2)


def circular_stencil(f, coeffs, axis=-1, backend=None):
    return _apply_stencil("circular_stencil", f, coeffs, axis, backend)


def circular_stencil_adjoint(g, coeffs, axis=-1, backend=None):
    return _apply_stencil("circular_stencil_adjoint", g, coeffs, axis, backend)
