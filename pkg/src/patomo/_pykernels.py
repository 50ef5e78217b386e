"""Pure numpy implementations of the hot kernels.

These are the reference versions; the compiled ``_ext`` module mirrors
their signatures and must agree with them to rounding error.
"""
import numpy as np

# segments shorter than this are corner grazes and carry no weight
_MIN_SEGMENT = 1e-12


def trace_rays(n, offsets, angles_rad):
    """Exact ray/pixel intersection lengths for a parallel-beam geometry.

    Parameters
    ----------
    n : int
        Pixels per side of the centred unit-pixel grid.
    offsets : ndarray, shape (N,)
        Detector coordinates of the rays.
    angles_rad : ndarray, shape (A,)
        Projection angles in radians.

    Returns
    -------
    indptr, indices, data : ndarray
        CSR arrays for the ``(A*N, n*n)`` weight matrix.  Row ``l*N + t`` is
        the ray at detector ``t`` and angle ``l``; column ``i*n + j`` is pixel
        ``(i, j)`` in row-major order.
    """
    offsets = np.ascontiguousarray(offsets, dtype=np.float64)
    half = 0.5 * n
    lines = np.arange(n + 1, dtype=np.float64) - half
    n_det = offsets.size

    row_counts = []
    all_cols = []
    all_vals = []
    for theta in np.asarray(angles_rad, dtype=np.float64):
        c, s = np.cos(theta), np.sin(theta)
        # ray point: p(u) = x_t * (c, s) + u * (-s, c)
        px0 = offsets * c
        py0 = offsets * s
        with np.errstate(divide="ignore", invalid="ignore"):
            if abs(s) > 1e-15:
                ux = (px0[:, None] - lines[None, :]) / s
            else:
                ux = np.full((n_det, n + 1), np.nan)
            if abs(c) > 1e-15:
                uy = (lines[None, :] - py0[:, None]) / c
            else:
                uy = np.full((n_det, n + 1), np.nan)
        u = np.sort(np.concatenate([ux, uy], axis=1), axis=1)
        seg = np.diff(u, axis=1)
        um = 0.5 * (u[:, 1:] + u[:, :-1])
        mx = px0[:, None] - um * s
        my = py0[:, None] + um * c
        with np.errstate(invalid="ignore"):
            jj = np.floor(mx + half)
            ii = np.floor(half - my)
            keep = (
                (seg > _MIN_SEGMENT)
                & (jj >= 0) & (jj < n)
                & (ii >= 0) & (ii < n)
            )
        row_counts.append(keep.sum(axis=1))
        cols = (ii * n + jj)[keep].astype(np.int64)
        all_cols.append(cols)
        all_vals.append(seg[keep])

    counts = np.concatenate(row_counts) if row_counts else np.zeros(0, np.int64)
    indptr = np.zeros(counts.size + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.concatenate(all_cols) if all_cols else np.zeros(0, np.int64)
    data = np.concatenate(all_vals) if all_vals else np.zeros(0)
    return indptr, indices, data


def circular_stencil(f, coeffs, axis):
    """``out[j] = sum_m coeffs[m] * f[(j + m) mod N]`` along ``axis``."""
    out = np.zeros_like(f, dtype=np.float64)
    for m, cm in enumerate(coeffs):
        if cm != 0:
            out += cm * np.roll(f, -m, axis=axis)
    return out


def circular_stencil_adjoint(g, coeffs, axis):
    """Transpose of :func:`circular_stencil` (correlation with the flipped stencil)."""
    out = np.zeros_like(g, dtype=np.float64)
    for m, cm in enumerate(coeffs):
        if cm != 0:
            out += cm * np.roll(g, m, axis=axis)
    return out
