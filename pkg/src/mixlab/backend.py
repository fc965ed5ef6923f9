"""Stencil backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
fallback is always available. ``MIXLAB_BACKEND=numpy|compiled`` forces a
choice (forcing ``compiled`` raises if the extension is missing).
"""

import os

import numpy as np

from . import _stencils_np

try:
    from . import _stencils as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None

_requested = os.environ.get("MIXLAB_BACKEND", "").strip().lower()
if _requested == "numpy":
    _impl = _stencils_np
    _name = "numpy"
elif _requested == "compiled":
    if _compiled is None:
        raise ImportError("MIXLAB_BACKEND=compiled but the extension is not built")
    _impl = _compiled
    _name = "compiled"
elif _compiled is not None:
    _impl = _compiled
    _name = "compiled"
else:
    _impl = _stencils_np
    _name = "numpy"


def backend_name() -> str:
    """Name of the active stencil backend: 'compiled' or 'numpy'."""
    return _name


def has_compiled() -> bool:
    return _compiled is not None


def diff_axis(f: np.ndarray, axis: int, h: float, periodic: bool) -> np.ndarray:
    """First derivative along one axis of a 3D float64 array."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    return np.asarray(_impl.diff_axis(f, axis, h, periodic))


def diff_axis_with(impl_name: str, f: np.ndarray, axis: int, h: float, periodic: bool) -> np.ndarray:
    """Run the stencil under an explicit backend, for cross-checking."""
    if impl_name == "numpy":
        impl = _stencils_np
    elif impl_name == "compiled":
        if _compiled is None:
            raise ImportError("compiled stencil backend is not built")
        impl = _compiled
    else:
        raise ValueError(f"unknown backend {impl_name!r}")
    f = np.ascontiguousarray(f, dtype=np.float64)
    return np.asarray(impl.diff_axis(f, axis, h, periodic))
