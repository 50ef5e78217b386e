# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Siddon-style ray tracing and circular stencils.

Signatures and results match ``patomo._pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, fabs, floor

cnp.import_array()

cdef double MIN_SEGMENT = 1e-12


cdef Py_ssize_t _trace_one(int n, double px0, double py0, double c, double s,
                           double[::1] ax, double[::1] ay,
                           long long[::1] cols, double[::1] vals,
                           Py_ssize_t pos, bint write) nogil:
    """Walk one ray; return number of segments, writing them from ``pos`` if asked."""
    cdef double half = 0.5 * n
    cdef Py_ssize_t nx = 0, ny = 0, a, ia = 0, ib = 0, count = 0
    cdef double u_prev, u_next, um, mx, my, seg
    cdef long ii, jj
    cdef bint have_prev = False

    if fabs(s) > 1e-15:
        nx = n + 1
        for a in range(nx):
            if s > 0:
                ax[a] = (px0 - ((n - a) - half)) / s
            else:
                ax[a] = (px0 - (a - half)) / s
    if fabs(c) > 1e-15:
        ny = n + 1
        for a in range(ny):
            if c > 0:
                ay[a] = ((a - half) - py0) / c
            else:
                ay[a] = (((n - a) - half) - py0) / c

    while ia < nx or ib < ny:
        if ib >= ny or (ia < nx and ax[ia] <= ay[ib]):
            u_next = ax[ia]
            ia += 1
        else:
            u_next = ay[ib]
            ib += 1
        if have_prev:
            seg = u_next - u_prev
            if seg > MIN_SEGMENT:
                um = 0.5 * (u_next + u_prev)
                mx = px0 - um * s
                my = py0 + um * c
                jj = <long>floor(mx + half)
                ii = <long>floor(half - my)
                if jj >= 0 and jj < n and ii >= 0 and ii < n:
                    if write:
                        cols[pos + count] = ii * n + jj
                        vals[pos + count] = seg
                    count += 1
        u_prev = u_next
        have_prev = True
    return count


def trace_rays(int n, offsets, angles_rad):
    cdef double[::1] off = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef double[::1] ang = np.ascontiguousarray(angles_rad, dtype=np.float64)
    cdef Py_ssize_t n_det = off.shape[0], n_ang = ang.shape[0]
    cdef Py_ssize_t n_rays = n_det * n_ang
    cdef double[::1] ax = np.empty(n + 1)
    cdef double[::1] ay = np.empty(n + 1)
    cdef long long[::1] dummy_cols = np.empty(1, dtype=np.int64)
    cdef double[::1] dummy_vals = np.empty(1)
    indptr_arr = np.zeros(n_rays + 1, dtype=np.int64)
    cdef long long[::1] indptr = indptr_arr
    cdef Py_ssize_t l, t, r
    cdef double c, s

    with nogil:
        for l in range(n_ang):
            c = cos(ang[l])
            s = sin(ang[l])
            for t in range(n_det):
                r = l * n_det + t
                indptr[r + 1] = indptr[r] + _trace_one(
                    n, off[t] * c, off[t] * s, c, s, ax, ay,
                    dummy_cols, dummy_vals, 0, False)

    indices_arr = np.empty(indptr[n_rays], dtype=np.int64)
    data_arr = np.empty(indptr[n_rays], dtype=np.float64)
    cdef long long[::1] cols = indices_arr
    cdef double[::1] vals = data_arr
    with nogil:
        for l in range(n_ang):
            c = cos(ang[l])
            s = sin(ang[l])
            for t in range(n_det):
                r = l * n_det + t
                _trace_one(n, off[t] * c, off[t] * s, c, s, ax, ay,
                           cols, vals, indptr[r], True)
    return indptr_arr, indices_arr, data_arr


def _stencil_2d(double[:, ::1] f, double[::1] coeffs, int axis, int sign):
    cdef Py_ssize_t rows = f.shape[0], ncols = f.shape[1]
    cdef Py_ssize_t k1 = coeffs.shape[0]
    out_arr = np.zeros((rows, ncols))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, m, shift, src
    cdef double c
    with nogil:
        # accumulate in stencil order, as the numpy fallback does
        for m in range(k1):
            c = coeffs[m]
            if c == 0.0:
                continue
            if axis == 1:
                shift = (sign * m) % ncols
                if shift < 0:
                    shift = shift + ncols
                for i in range(rows):
                    for j in range(ncols - shift):
                        out[i, j] = out[i, j] + c * f[i, j + shift]
                    for j in range(ncols - shift, ncols):
                        out[i, j] = out[i, j] + c * f[i, j + shift - ncols]
            else:
                shift = (sign * m) % rows
                if shift < 0:
                    shift = shift + rows
                for i in range(rows):
                    src = i + shift
                    if src >= rows:
                        src = src - rows
                    for j in range(ncols):
                        out[i, j] = out[i, j] + c * f[src, j]
    return out_arr


def circular_stencil(f, coeffs, int axis):
    return _stencil_2d(np.ascontiguousarray(f, dtype=np.float64),
                       np.ascontiguousarray(coeffs, dtype=np.float64), axis, 1)


def circular_stencil_adjoint(g, coeffs, int axis):
    return _stencil_2d(np.ascontiguousarray(g, dtype=np.float64),
                       np.ascontiguousarray(coeffs, dtype=np.float64), axis, -1)
