"""Diffeomorphic observer changes on one constituent's slicing.

A deformation is represented to first order by its generator, a velocity
field acting on the target constituent only. The energy-balance shift it
induces splits into three part integrals: a constitutive term pairing the
metric derivative of the internal energy against the Lie derivative of
the metric, a momentum term pairing the pointwise momentum balance
against the generator, and a moment term pairing the stress skew part
plus the moment growth against the skew generator gradient. Each term is
returned separately so the arbitrariness-of-generator argument can be
tested termwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import diffops
from .analytic import AnalyticFieldSpec, AnalyticTensorSpec, SampledScalar, SampledTensor
from .fields import Grid, Part, ScalarField, TensorField, VectorField, integrate_volume
from .mixture import MixtureState

__all__ = [
    "SpatialDeformation",
    "ConstitutiveEnergy",
    "DoyleEricksenStress",
    "lie_metric",
    "doyle_ericksen_residual",
    "finite_difference_energy_gradient",
    "CovarianceTerms",
    "covariance_residual",
]


@dataclass
class SpatialDeformation:
    """First-order deformation data: generator field, target constituent,
    and the perturbation amplitude used by metric finite differencing."""

    generator: VectorField
    target: int = 0
    amplitude: float = 1e-5

    def __post_init__(self):
        if self.amplitude <= 0.0:
            raise ValueError("perturbation amplitude must be positive")


@dataclass
class ConstitutiveEnergy:
    """Closed-form internal energy density e(rho, g) with analytic metric
    derivative.

    The built-in family is ``e = a tr(g) + (b/2) tr(g g) + c ln det(g)``,
    optionally times ``(1 + d rho)``; its metric derivative is
    ``(a I + b g + c inv(g)) (1 + d rho)``. Metrics of other constituents
    may be supplied but act as frozen parameters only.
    """

    trace_coeff: float = 0.5
    quad_coeff: float = 0.0
    logdet_coeff: float = 0.0
    rho_coeff: float = 0.0

    def energy(self, rho: np.ndarray, g: np.ndarray) -> np.ndarray:
        tr = np.trace(g, axis1=-2, axis2=-1)
        val = self.trace_coeff * tr
        if self.quad_coeff:
            val = val + 0.5 * self.quad_coeff * np.einsum("...ij,...ji->...", g, g)
        if self.logdet_coeff:
            val = val + self.logdet_coeff * np.log(np.linalg.det(g))
        return val * (1.0 + self.rho_coeff * rho)

    def d_energy_d_metric(self, rho: np.ndarray, g: np.ndarray) -> np.ndarray:
        eye = np.broadcast_to(np.eye(3), g.shape)
        out = self.trace_coeff * eye
        if self.quad_coeff:
            out = out + self.quad_coeff * g
        if self.logdet_coeff:
            out = out + self.logdet_coeff * np.linalg.inv(g)
        return out * (1.0 + self.rho_coeff * rho)[..., None, None]


def finite_difference_energy_gradient(ce: ConstitutiveEnergy, rho: np.ndarray,
                                      g: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference metric derivative of the energy.

    Perturbs each independent symmetric component pair; the directional
    derivative along the symmetrized basis tensor equals twice the
    off-diagonal derivative entries, which is undone before returning so
    the result is directly comparable with the analytic derivative.
    """
    out = np.zeros_like(g)
    for i in range(3):
        for j in range(i, 3):
            e = np.zeros((3, 3))
            e[i, j] = 1.0
            e[j, i] = 1.0
            plus = ce.energy(rho, g + step * e)
            minus = ce.energy(rho, g - step * e)
            slope = (plus - minus) / (2.0 * step)
            if i == j:
                out[..., i, i] = slope
            else:
                out[..., i, j] = 0.5 * slope
                out[..., j, i] = 0.5 * slope
    return out


@dataclass
class DoyleEricksenStress:
    """Analytic stress recipe equal to twice the density-weighted metric
    derivative of a built-in energy; usable as a manufactured stress spec.

    Only energies without the log-det part are representable (the metric
    inverse has no closed-form sampled derivative here).
    """

    energy: ConstitutiveEnergy
    rho: AnalyticFieldSpec
    metric: Optional[AnalyticTensorSpec] = None

    def __post_init__(self):
        if self.energy.logdet_coeff:
            raise ValueError("log-det energies are not representable as stress recipes")
        if self.energy.rho_coeff:
            raise ValueError("density-coupled energies are not representable as stress recipes")

    def sampled(self, grid: Grid, t: float) -> SampledTensor:
        rho = self.rho.sampled(grid, t)
        a = 2.0 * self.energy.trace_coeff
        b = 2.0 * self.energy.quad_coeff
        zero = SampledScalar.const(grid, 0.0)
        rows = [[zero, zero, zero], [zero, zero, zero], [zero, zero, zero]]
        for i in range(3):
            rows[i][i] = rho * a
        out = SampledTensor(rows)
        if b and self.metric is not None:
            out = out + self.metric.sampled(grid, t).scale(rho * b)
        elif b:
            for i in range(3):
                rows[i][i] = rho * (a + b)
            out = SampledTensor(rows)
        return out


def lie_metric(w: VectorField, g: Optional[TensorField] = None) -> TensorField:
    """Lie derivative of a metric along a generator field.

    For the identity metric this reduces exactly to twice the symmetric
    generator gradient; the general formula adds the transported metric
    gradient.
    """
    grid = w.grid
    grad_w = diffops.grad(w).data
    if g is None:
        data = grad_w + np.swapaxes(grad_w, -1, -2)
        return TensorField(grid, data)
    gd = g.data
    term = np.einsum("...ki,...kj->...ij", grad_w, gd) + np.einsum("...ik,...kj->...ij", gd, grad_w)
    advect = np.zeros_like(gd)
    from . import backend

    for i in range(3):
        for j in range(3):
            for axis in range(3):
                advect[..., i, j] += w.data[..., axis] * backend.diff_axis(
                    np.ascontiguousarray(gd[..., i, j]), axis, grid.h, grid.periodic
                )
    return TensorField(grid, term + advect)


def doyle_ericksen_residual(m: MixtureState, alpha: int, ce: ConstitutiveEnergy) -> TensorField:
    """Symmetric stress minus twice the density-weighted metric derivative
    of the internal energy, at the state's metric."""
    c = m.constituents[alpha]
    sym_t = 0.5 * (c.stress.data + np.swapaxes(c.stress.data, -1, -2))
    de = ce.d_energy_d_metric(c.rho.data, c.metric.data)
    return TensorField(m.grid, sym_t - 2.0 * c.rho.data[..., None, None] * de)


@dataclass
class CovarianceTerms:
    de_term: float
    momentum_term: float
    moment_term: float


def covariance_residual(m: MixtureState, alpha: int, d: SpatialDeformation,
                        ce: ConstitutiveEnergy, p: Part,
                        kappa_prime: float = 0.5, space: str = "discrete") -> CovarianceTerms:
    """The three part integrals of the energy-balance shift under a
    first-order deformation of one constituent's slicing.

    ``kappa_prime`` multiplies the moment-growth cross tensor against the
    stress skew part; 0.5 matches a state closed with the full-skew
    moment convention, 1.0 matches the half-skew convention.
    """
    if d.target != alpha:
        raise ValueError("deformation targets a different constituent")
    c = m.constituents[alpha]
    rho = m.rho.data
    w = d.generator
    lie = lie_metric(w, c.metric).data
    de_density = ce.d_energy_d_metric(c.rho.data, c.metric.data)
    sym_t = 0.5 * (c.stress.data + np.swapaxes(c.stress.data, -1, -2))
    de_integrand = np.einsum(
        "...ij,...ij->...",
        c.rho.data[..., None, None] * de_density - 0.5 * sym_t,
        lie,
    )
    de_term = integrate_volume(ScalarField(m.grid, de_integrand), p)

    from .balances import _div_stress

    div_t = _div_stress(m, alpha, space)
    balance = (
        c.rho.data[..., None] * c.body_force_total().data
        + div_t
        + rho[..., None] * c.growth_momentum.data
    )
    momentum_term = -integrate_volume(
        ScalarField(m.grid, np.einsum("...i,...i->...", balance, w.data)), p
    )

    grad_w = diffops.grad(w).data
    skw_grad = 0.5 * (grad_w - np.swapaxes(grad_w, -1, -2))
    skw_t = 0.5 * (c.stress.data - np.swapaxes(c.stress.data, -1, -2))
    cross_mu = diffops.cross_tensor(c.growth_moment).data
    moment_integrand = np.einsum(
        "...ij,...ij->...",
        skw_t + kappa_prime * rho[..., None, None] * cross_mu,
        skw_grad,
    )
    moment_term = -integrate_volume(ScalarField(m.grid, moment_integrand), p)
    return CovarianceTerms(de_term, momentum_term, moment_term)
