"""Desk-scale verification laboratory for multi-constituent continuum
mixtures: balance-law residual evaluators, power-invariance and covariance
checks on manufactured states, and a small explicit two-fluid simulator.
"""

from .backend import backend_name, has_compiled
from .fields import Grid, Part, ScalarField, TensorField, VectorField

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "Part",
    "ScalarField",
    "VectorField",
    "TensorField",
    "backend_name",
    "has_compiled",
    "__version__",
]
