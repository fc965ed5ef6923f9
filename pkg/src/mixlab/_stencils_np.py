"""Pure-numpy twin of the compiled stencil kernels.

Used when the compiled extension is unavailable or when the
``MIXLAB_BACKEND=numpy`` override is set.
"""

import numpy as np


def diff_axis(f: np.ndarray, axis: int, h: float, periodic: bool) -> np.ndarray:
    """Central first derivative of f along axis (0, 1 or 2), spacing h.

    Periodic grids wrap the stencil; clamped grids use the one-sided
    second-order stencil on the two boundary planes.
    """
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    out = (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2.0 * h)
    if not periodic:
        lo = [slice(None)] * 3
        lo1 = [slice(None)] * 3
        lo2 = [slice(None)] * 3
        hi = [slice(None)] * 3
        hi1 = [slice(None)] * 3
        hi2 = [slice(None)] * 3
        lo[axis], lo1[axis], lo2[axis] = 0, 1, 2
        hi[axis], hi1[axis], hi2[axis] = -1, -2, -3
        lo, lo1, lo2 = tuple(lo), tuple(lo1), tuple(lo2)
        hi, hi1, hi2 = tuple(hi), tuple(hi1), tuple(hi2)
        out[lo] = (-3.0 * f[lo] + 4.0 * f[lo1] - f[lo2]) / (2.0 * h)
        out[hi] = (3.0 * f[hi] - 4.0 * f[hi1] + f[hi2]) / (2.0 * h)
    return out
