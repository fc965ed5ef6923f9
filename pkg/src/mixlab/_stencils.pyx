# cython: language_level=3
"""Compiled finite-difference kernels for 3D structured grids.

Hot loops of the package: one second-order first-derivative stencil per
axis, with periodic wraparound or one-sided closure at clamped edges.
The pure-numpy twin lives in ``_stencils_np``; ``backend`` picks one at
import time.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()


@cython.boundscheck(False)
@cython.wraparound(False)
def diff_axis(double[:, :, ::1] f, int axis, double h, bint periodic):
    """Central first derivative of f along axis (0, 1 or 2), spacing h.

    Periodic grids wrap the stencil; clamped grids use the one-sided
    second-order stencil on the two boundary planes.
    """
    cdef Py_ssize_t nx = f.shape[0]
    cdef Py_ssize_t ny = f.shape[1]
    cdef Py_ssize_t nz = f.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out_arr = np.empty((nx, ny, nz), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double inv2h = 0.5 / h
    cdef Py_ssize_t i, j, k, n

    if axis == 0:
        n = nx
        with nogil:
            for i in range(1, n - 1):
                for j in range(ny):
                    for k in range(nz):
                        out[i, j, k] = (f[i + 1, j, k] - f[i - 1, j, k]) * inv2h
            if periodic:
                for j in range(ny):
                    for k in range(nz):
                        out[0, j, k] = (f[1, j, k] - f[n - 1, j, k]) * inv2h
                        out[n - 1, j, k] = (f[0, j, k] - f[n - 2, j, k]) * inv2h
            else:
                for j in range(ny):
                    for k in range(nz):
                        out[0, j, k] = (-3.0 * f[0, j, k] + 4.0 * f[1, j, k] - f[2, j, k]) * inv2h
                        out[n - 1, j, k] = (3.0 * f[n - 1, j, k] - 4.0 * f[n - 2, j, k] + f[n - 3, j, k]) * inv2h
    elif axis == 1:
        n = ny
        with nogil:
            for i in range(nx):
                for j in range(1, n - 1):
                    for k in range(nz):
                        out[i, j, k] = (f[i, j + 1, k] - f[i, j - 1, k]) * inv2h
                if periodic:
                    for k in range(nz):
                        out[i, 0, k] = (f[i, 1, k] - f[i, n - 1, k]) * inv2h
                        out[i, n - 1, k] = (f[i, 0, k] - f[i, n - 2, k]) * inv2h
                else:
                    for k in range(nz):
                        out[i, 0, k] = (-3.0 * f[i, 0, k] + 4.0 * f[i, 1, k] - f[i, 2, k]) * inv2h
                        out[i, n - 1, k] = (3.0 * f[i, n - 1, k] - 4.0 * f[i, n - 2, k] + f[i, n - 3, k]) * inv2h
    elif axis == 2:
        n = nz
        with nogil:
            for i in range(nx):
                for j in range(ny):
                    for k in range(1, n - 1):
                        out[i, j, k] = (f[i, j, k + 1] - f[i, j, k - 1]) * inv2h
                    if periodic:
                        out[i, j, 0] = (f[i, j, 1] - f[i, j, n - 1]) * inv2h
                        out[i, j, n - 1] = (f[i, j, 0] - f[i, j, n - 2]) * inv2h
                    else:
                        out[i, j, 0] = (-3.0 * f[i, j, 0] + 4.0 * f[i, j, 1] - f[i, j, 2]) * inv2h
                        out[i, j, n - 1] = (3.0 * f[i, j, n - 1] - 4.0 * f[i, j, n - 2] + f[i, j, n - 3]) * inv2h
    else:
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")

    return out_arr
