"""Discrete differential operators and algebraic tensor decompositions.

All derivative operators are second-order central differences delegated
to the stencil backend. Conventions, fixed once and property-tested:

* ``grad`` of a vector puts d v_i / d x_j in entry (i, j), so the
  advective derivative is ``(grad v) v``.
* ``div`` of a tensor contracts the second index, entry i = d_j T_ij,
  which makes ``div(a (x) b) = (grad a) b + a div b`` hold.
* ``cross_tensor(a)`` is the matrix with ``cross_tensor(a) b = a x b``;
  ``axial`` inverts it on skew tensors.
"""

from __future__ import annotations

import numpy as np

from . import backend
from .fields import Grid, ScalarField, TensorField, VectorField

__all__ = [
    "grad",
    "div",
    "curl",
    "sym",
    "skw",
    "axial",
    "cross_tensor",
    "sym_skw_axial",
    "alternating_symbol",
]


def alternating_symbol() -> np.ndarray:
    """Alternating (permutation) symbol e_ijk as a (3, 3, 3) array."""
    e = np.zeros((3, 3, 3))
    e[0, 1, 2] = e[1, 2, 0] = e[2, 0, 1] = 1.0
    e[0, 2, 1] = e[2, 1, 0] = e[1, 0, 2] = -1.0
    return e


def _d(grid: Grid, values: np.ndarray, axis: int) -> np.ndarray:
    return backend.diff_axis(values, axis, grid.h, grid.periodic)


def grad(f: ScalarField | VectorField):
    """Gradient: scalar -> vector field, vector -> tensor field."""
    grid = f.grid
    if isinstance(f, ScalarField):
        data = np.stack([_d(grid, f.data, a) for a in range(3)], axis=-1)
        return VectorField(grid, data)
    if isinstance(f, VectorField):
        data = np.empty(grid.shape + (3, 3))
        for i in range(3):
            for j in range(3):
                data[..., i, j] = _d(grid, f.data[..., i], j)
        return TensorField(grid, data)
    raise TypeError("grad expects a scalar or vector field")


def div(f: VectorField | TensorField):
    """Divergence: vector -> scalar field, tensor -> vector field."""
    grid = f.grid
    if isinstance(f, VectorField):
        data = sum(_d(grid, f.data[..., a], a) for a in range(3))
        return ScalarField(grid, data)
    if isinstance(f, TensorField):
        data = np.empty(grid.shape + (3,))
        for i in range(3):
            data[..., i] = sum(_d(grid, f.data[..., i, j], j) for j in range(3))
        return VectorField(grid, data)
    raise TypeError("div expects a vector or tensor field")


def curl(f: VectorField) -> VectorField:
    if not isinstance(f, VectorField):
        raise TypeError("curl expects a vector field")
    grid = f.grid
    dz_y = _d(grid, f.data[..., 2], 1)
    dy_z = _d(grid, f.data[..., 1], 2)
    dx_z = _d(grid, f.data[..., 0], 2)
    dz_x = _d(grid, f.data[..., 2], 0)
    dy_x = _d(grid, f.data[..., 1], 0)
    dx_y = _d(grid, f.data[..., 0], 1)
    data = np.stack([dz_y - dy_z, dx_z - dz_x, dy_x - dx_y], axis=-1)
    return VectorField(grid, data)


def sym(t: TensorField) -> TensorField:
    return TensorField(t.grid, 0.5 * (t.data + np.swapaxes(t.data, -1, -2)), t.unit)


def skw(t: TensorField) -> TensorField:
    return TensorField(t.grid, 0.5 * (t.data - np.swapaxes(t.data, -1, -2)), t.unit)


def axial(t: TensorField) -> VectorField:
    """Axial vector of the skew part: axial(cross_tensor(a)) = a."""
    d = t.data
    data = 0.5 * np.stack(
        [
            d[..., 2, 1] - d[..., 1, 2],
            d[..., 0, 2] - d[..., 2, 0],
            d[..., 1, 0] - d[..., 0, 1],
        ],
        axis=-1,
    )
    return VectorField(t.grid, data)


def sym_skw_axial(t: TensorField) -> tuple[TensorField, TensorField, VectorField]:
    return sym(t), skw(t), axial(t)


def cross_tensor(a: VectorField | np.ndarray, grid: Grid | None = None) -> TensorField:
    """Skew tensor of a vector field: cross_tensor(a) b = a x b."""
    if isinstance(a, VectorField):
        grid = a.grid
        v = a.data
    else:
        if grid is None:
            raise ValueError("cross_tensor of a bare array needs a grid")
        v = np.broadcast_to(np.asarray(a, dtype=np.float64), grid.shape + (3,))
    data = np.zeros(grid.shape + (3, 3))
    data[..., 0, 1] = -v[..., 2]
    data[..., 0, 2] = v[..., 1]
    data[..., 1, 0] = v[..., 2]
    data[..., 1, 2] = -v[..., 0]
    data[..., 2, 0] = -v[..., 1]
    data[..., 2, 1] = v[..., 0]
    return TensorField(grid, data)
