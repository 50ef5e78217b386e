"""Discrete parallel-beam Radon operator on a centred unit-pixel grid.

The forward model integrates an ``n x n`` image along the lines

    p(u) = x_t * (cos th, sin th) + u * (-sin th, cos th),

one per detector bin ``x_t`` and angle ``th``.  Weights are exact chord
lengths of each line through each pixel square, stored once as a CSR
matrix; the adjoint is the transpose of the same weights.

Sinograms are ``(N, A)`` arrays (detector x angle).  Flattened they are
ordered detector-fastest, then angle.
"""
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import _kernels

# n = 1024 with 180 angles is ~2.6e8 nonzeros (~3 GB); refuse anything larger
MAX_GRID = 1024


@dataclass(frozen=True)
class ImageGrid:
    """Square grid of unit pixels centred on the origin."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid size must be an integer >= 2, got {self.n}")
        if self.n > MAX_GRID:
            raise ValueError(f"grid size {self.n} exceeds the supported maximum {MAX_GRID}")

    @property
    def shape(self):
        return (self.n, self.n)

    def pixel_centers(self):
        """Return ``(x, y)`` centre coordinates, each of shape ``(n, n)``."""
        c = np.arange(self.n) - (self.n - 1) / 2.0
        x = np.broadcast_to(c[None, :], self.shape)
        y = np.broadcast_to(-c[:, None], self.shape)
        return x, y


@dataclass(frozen=True)
class AcquisitionGeometry:
    """Detector bins of unit width and a strictly increasing list of angles in degrees."""

    detector_count: int
    angles: tuple

    def __post_init__(self):
        angles = tuple(float(a) for a in np.atleast_1d(self.angles))
        object.__setattr__(self, "angles", angles)
        if self.detector_count < 1:
            raise ValueError("detector_count must be >= 1")
        if not angles:
            raise ValueError("angle list is empty")
        a = np.asarray(angles)
        if np.any(a < -90.0) or np.any(a >= 90.0):
            raise ValueError("angles must lie in [-90, 90)")
        if np.any(np.diff(a) <= 0):
            raise ValueError("angles must be strictly increasing")

    @classmethod
    def from_range(cls, detector_count, start, stop, step):
        """Angles ``start, start+step, ...`` up to and including ``stop`` (within rounding)."""
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return cls(detector_count, tuple(start + step * np.arange(count)))

    @property
    def n_angles(self):
        return len(self.angles)

    @property
    def n_rays(self):
        return self.n_angles * self.detector_count

    @property
    def sinogram_shape(self):
        return (self.detector_count, self.n_angles)

    def detector_offsets(self):
        return np.arange(self.detector_count) - (self.detector_count - 1) / 2.0

    def angles_rad(self):
        return np.deg2rad(np.asarray(self.angles))


class LinearOperator:
    """Minimal interface shared by the Radon operator and test doubles.

    Subclasses provide ``domain_shape``, ``range_shape`` and the two
    ``_matvec``/``_rmatvec`` methods on flat vectors.
    """

    domain_shape = ()
    range_shape = ()

    def apply(self, f):
        f = np.asarray(f, dtype=np.float64)
        if f.shape != self.domain_shape:
            raise ValueError(f"expected input of shape {self.domain_shape}, got {f.shape}")
        return self._matvec(f.ravel()).reshape(self.range_shape, order=self._range_order)

    def apply_adjoint(self, b):
        b = np.asarray(b, dtype=np.float64)
        if b.shape != self.range_shape:
            raise ValueError(f"expected input of shape {self.range_shape}, got {b.shape}")
        return self._rmatvec(b.ravel(order=self._range_order)).reshape(self.domain_shape)

    _range_order = "C"

    def __matmul__(self, f):
        return self.apply(f)

    def scaled(self, factor):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class MatrixOperator(LinearOperator):
    """Explicit (dense or sparse) matrix with a uniform scale factor."""

    matrix: object
    domain_shape: tuple = None
    range_shape: tuple = None
    scale: float = 1.0

    def __post_init__(self):
        m, n = self.matrix.shape
        if self.domain_shape is None:
            object.__setattr__(self, "domain_shape", (n,))
        if self.range_shape is None:
            object.__setattr__(self, "range_shape", (m,))

    def _matvec(self, x):
        return self.scale * np.asarray(self.matrix @ x).ravel()

    def _rmatvec(self, y):
        return self.scale * np.asarray(self.matrix.T @ y).ravel()

    def scaled(self, factor):
        return replace(self, scale=self.scale * factor)

    def to_dense(self):
        m = self.matrix.toarray() if sp.issparse(self.matrix) else np.asarray(self.matrix)
        return self.scale * m


@dataclass(frozen=True, eq=False)
class RadonOperator(LinearOperator):
    """Parallel-beam projector ``W`` with precomputed sparse weights.

    ``apply`` maps an ``(n, n)`` image to an ``(N, A)`` sinogram and
    ``apply_adjoint`` back-projects.  Instances are immutable; rescaling
    returns a new operator that shares the weight arrays.
    """

    grid: ImageGrid
    geometry: AcquisitionGeometry
    weights: sp.csr_matrix = field(repr=False)
    weights_t: sp.csr_matrix = field(repr=False)
    scale: float = 1.0

    # the flat ray index is l*N + t, i.e. column-major in the (N, A) sinogram
    _range_order = "F"

    @property
    def domain_shape(self):
        return self.grid.shape

    @property
    def range_shape(self):
        return self.geometry.sinogram_shape

    def _matvec(self, x):
        out = self.weights @ x
        if self.scale != 1.0:
            out *= self.scale
        return out

    def _rmatvec(self, y):
        out = self.weights_t @ y
        if self.scale != 1.0:
            out *= self.scale
        return out

    def scaled(self, factor):
        if not np.isfinite(factor) or factor <= 0:
            raise ValueError("scale factor must be positive and finite")
        return replace(self, scale=self.scale * factor)

    def to_dense(self):
        """Materialize ``scale * weights`` as a dense ``(A*N, n*n)`` array."""
        return self.scale * self.weights.toarray()


def build_radon(grid, geometry, backend=None):
    """Trace every ray of ``geometry`` through ``grid`` and return the unscaled operator.

    Parameters
    ----------
    grid : ImageGrid or int
    geometry : AcquisitionGeometry
    backend : {"python", "cython"}, optional
        Kernel backend; defaults to the compiled one when available.
    """
    if not isinstance(grid, ImageGrid):
        grid = ImageGrid(int(grid))
    if geometry.n_angles == 0:
        raise ValueError("angle list is empty")
    indptr, indices, data = _kernels.trace_rays(
        grid.n, geometry.detector_offsets(), geometry.angles_rad(), backend=backend
    )
    shape = (geometry.n_rays, grid.n * grid.n)
    weights = sp.csr_matrix((data, indices, indptr), shape=shape)
    weights_t = weights.T.tocsr()
    return RadonOperator(grid, geometry, weights, weights_t)


def estimate_norm(op, iters=50, seed=0):
    """Power-method estimate of the largest singular value of ``op``.

    Iterates ``W^T W`` from a seeded Gaussian start vector and returns
    ``||W v||`` for the final unit vector ``v``.
    """
    if int(iters) != iters or iters < 1:
        raise ValueError("iters must be a positive integer")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.domain_shape)
    v /= np.linalg.norm(v)
    for _ in range(int(iters)):
        w = op.apply_adjoint(op.apply(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(op.apply(v)))


def rescale_to_unit_norm(op, b, iters=50, seed=0):
    """Scale ``op`` and ``b`` by ``1/||op||`` so the operator has unit spectral norm.

    Returns ``(scaled_op, scaled_b, norm)``; ``norm`` is the estimate used,
    which callers need to map data back to physical units.
    """
    norm = estimate_norm(op, iters=iters, seed=seed)
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("cannot rescale a zero operator")
    return op.scaled(1.0 / norm), np.asarray(b, dtype=np.float64) / norm, norm
