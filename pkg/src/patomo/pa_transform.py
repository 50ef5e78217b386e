"""Polynomial annihilation (higher-order finite difference) transforms.

The order-``k`` transform applies the stencil ``(-1)**(k+m) * C(k, m)``,
``m = 0..k``, to ``f[j], ..., f[j+k]``.  Every index uses periodic
extension, so the operator is square and its adjoint is a circular
correlation with the same stencil.  In 2-D the transform stacks the
differences along x (within rows) and along y (within columns).

Order 1 is the anisotropic TV difference, order 0 the identity.
"""
from dataclasses import dataclass
from math import comb

import numpy as np

from . import _kernels

MAX_ORDER = 6


def stencil(k):
    """Integer stencil coefficients ``[(-1)**(k+m) * C(k, m) for m in 0..k]``."""
    if int(k) != k or k < 0:
        raise ValueError(f"order must be a non-negative integer, got {k}")
    k = int(k)
    return [(-1) ** (k + m) * comb(k, m) for m in range(k + 1)]


def operator_l1_norm(k):
    """Induced l1 norm of the order-``k`` transform, ``2**k``."""
    return float(sum(abs(c) for c in stencil(k)))


@dataclass(frozen=True)
class PATransform:
    """Order-``k`` periodic PA transform in one or two dimensions."""

    order: int
    ndim: int = 2
    backend: str = None

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 0:
            raise ValueError(f"order must be a non-negative integer, got {self.order}")
        if self.order > MAX_ORDER:
            raise ValueError(f"orders above {MAX_ORDER} are not supported")
        if self.ndim not in (1, 2):
            raise ValueError("ndim must be 1 or 2")

    @property
    def coefficients(self):
        return np.asarray(stencil(self.order), dtype=np.float64)

    @property
    def l1_norm(self):
        return operator_l1_norm(self.order)

    def _check_length(self, size):
        if size < self.order + 1:
            raise ValueError(
                f"order-{self.order} stencil needs at least {self.order + 1} samples, got {size}"
            )

    def apply_1d(self, f):
        f = np.asarray(f, dtype=np.float64)
        if f.ndim != 1:
            raise ValueError("apply_1d expects a vector")
        self._check_length(f.size)
        return _kernels.circular_stencil(f, self.coefficients, axis=0, backend=self.backend)

    def adjoint_1d(self, g):
        g = np.asarray(g, dtype=np.float64)
        if g.ndim != 1:
            raise ValueError("adjoint_1d expects a vector")
        self._check_length(g.size)
        return _kernels.circular_stencil_adjoint(g, self.coefficients, axis=0,
                                                 backend=self.backend)

    def apply_2d(self, f):
        """Return the ``(2, n, n)`` stack ``[T^x f, T^y f]``."""
        f = np.asarray(f, dtype=np.float64)
        if f.ndim != 2:
            raise ValueError("apply_2d expects an image")
        self._check_length(min(f.shape))
        c = self.coefficients
        return np.stack([
            _kernels.circular_stencil(f, c, axis=1, backend=self.backend),
            _kernels.circular_stencil(f, c, axis=0, backend=self.backend),
        ])

    def apply_adjoint_2d(self, g):
        g = np.asarray(g, dtype=np.float64)
        if g.ndim != 3 or g.shape[0] != 2 or g.shape[1] != g.shape[2]:
            raise ValueError(f"expected a (2, n, n) stack, got shape {g.shape}")
        self._check_length(g.shape[1])
        c = self.coefficients
        return (_kernels.circular_stencil_adjoint(g[0], c, axis=1, backend=self.backend)
                + _kernels.circular_stencil_adjoint(g[1], c, axis=0, backend=self.backend))

    def apply(self, f):
        return self.apply_1d(f) if self.ndim == 1 else self.apply_2d(f)

    def apply_adjoint(self, g):
        return self.adjoint_1d(g) if self.ndim == 1 else self.apply_adjoint_2d(g)
