"""Per-constituent state, mixture aggregates and the mixture material
derivative identity.

A ``MixtureState`` is a snapshot: an ordered list of constituents sharing
one grid, plus the snapshot time. Aggregates (total density, mass
concentrations, mean velocity, diffusion velocities) are cached on first
access; states are treated as immutable after construction.

States built from analytic specifications carry a ``MixtureAnalytic``
bundle with exact space and time partials of the defining fields, which
residual evaluators can use instead of discrete stencils.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .analytic import (
    AnalyticFieldSpec,
    AnalyticTensorSpec,
    AnalyticVectorSpec,
    SampledScalar,
    SampledTensor,
    SampledVector,
)
from .fields import Grid, ScalarField, TensorField, VectorField

__all__ = [
    "FloorViolation",
    "ConstituentState",
    "MixtureState",
    "ConstituentAnalytic",
    "MixtureAnalytic",
    "AnalyticConstituent",
    "AnalyticMixture",
    "aggregates",
    "totals",
    "material_derivative_residual",
]

RHO_FLOOR_RELATIVE = 1e-12


class FloorViolation(ValueError):
    """Total density at or below the vacuum floor somewhere in the grid."""

    def __init__(self, count: int, floor: float):
        self.count = count
        self.floor = floor
        super().__init__(f"total density <= floor {floor:.3e} at {count} nodes")


@dataclass
class ConstituentState:
    """All fields of one constituent on a shared grid.

    Optional fields default to zero (the metric defaults to identity).
    ``rho_dot``, ``vel_dot`` and ``eps_dot`` are time partials at fixed
    position, populated by manufactured-state builders or by time
    differencing of stored snapshots.
    """

    rho: ScalarField
    vel: VectorField
    accel: Optional[VectorField] = None
    stress: Optional[TensorField] = None
    body_force_ni: Optional[VectorField] = None
    body_force_in: Optional[VectorField] = None
    growth_momentum: Optional[VectorField] = None
    growth_moment: Optional[VectorField] = None
    mass_growth: Optional[ScalarField] = None
    internal_energy: Optional[ScalarField] = None
    energy_growth: Optional[ScalarField] = None
    heat_flux: Optional[VectorField] = None
    heat_source: Optional[ScalarField] = None
    entropy: Optional[ScalarField] = None
    entropy_growth: Optional[ScalarField] = None
    entropy_flux: Optional[VectorField] = None
    entropy_source: Optional[ScalarField] = None
    metric: Optional[TensorField] = None
    rho_dot: Optional[ScalarField] = None
    vel_dot: Optional[VectorField] = None
    eps_dot: Optional[ScalarField] = None
    name: str = ""

    def __post_init__(self):
        grid = self.rho.grid
        if np.any(self.rho.data < 0.0):
            raise ValueError("constituent density must be nonnegative")
        if self.metric is None:
            self.metric = TensorField.identity(grid)
        else:
            m = self.metric.data
            if not np.allclose(m, np.swapaxes(m, -1, -2), atol=1e-12):
                raise ValueError("constituent metric must be symmetric")
            if np.any(np.linalg.eigvalsh(m)[..., 0] <= 0.0):
                raise ValueError("constituent metric must be positive definite")
        zero_scalars = [
            "mass_growth", "internal_energy", "energy_growth", "heat_source",
            "entropy", "entropy_growth", "entropy_source",
        ]
        zero_vectors = [
            "accel", "body_force_ni", "body_force_in", "growth_momentum",
            "growth_moment", "heat_flux", "entropy_flux",
        ]
        for attr in zero_scalars:
            if getattr(self, attr) is None:
                setattr(self, attr, ScalarField.zeros(grid))
        for attr in zero_vectors:
            if getattr(self, attr) is None:
                setattr(self, attr, VectorField.zeros(grid))
        if self.stress is None:
            self.stress = TensorField.zeros(grid)
        for attr in ("vel", "accel", "stress", "metric"):
            if getattr(self, attr).grid.shape != grid.shape:
                raise ValueError("constituent fields must share one grid")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def body_force_total(self) -> VectorField:
        return VectorField(self.grid, self.body_force_ni.data + self.body_force_in.data)


@dataclass
class ConstituentAnalytic:
    """Sampled analytic data (exact partials) for one constituent."""

    rho: SampledScalar
    vel: SampledVector
    stress: Optional[SampledTensor] = None
    growth_momentum: Optional[SampledVector] = None
    growth_moment: Optional[SampledVector] = None
    internal_energy: Optional[SampledScalar] = None
    heat_flux: Optional[SampledVector] = None
    metric: Optional[SampledTensor] = None
    div_stress: Optional[np.ndarray] = None


@dataclass
class MixtureAnalytic:
    """Analytic bundle for a whole state, attached by state builders."""

    constituents: list[ConstituentAnalytic]
    mixture_accel: Optional[np.ndarray] = None

    def rho_total(self) -> SampledScalar:
        total = self.constituents[0].rho
        for c in self.constituents[1:]:
            total = total + c.rho
        return total

    def mean_velocity(self) -> SampledVector:
        rho = self.rho_total()
        flux = self.constituents[0].vel.scale(self.constituents[0].rho)
        for c in self.constituents[1:]:
            flux = flux + c.vel.scale(c.rho)
        return SampledVector([f / rho for f in flux.c])


class MixtureState:
    """Ordered constituents plus snapshot time and cached aggregates."""

    def __init__(self, constituents: Sequence[ConstituentState], t: float = 0.0,
                 analytic: Optional[MixtureAnalytic] = None):
        if not constituents:
            raise ValueError("a mixture needs at least one constituent")
        grid = constituents[0].grid
        for c in constituents:
            if c.grid.shape != grid.shape or c.grid.h != grid.h:
                raise ValueError("all constituents must share one grid")
        self.constituents = list(constituents)
        self.t = float(t)
        self.analytic = analytic

    @property
    def grid(self) -> Grid:
        return self.constituents[0].grid

    @property
    def n_constituents(self) -> int:
        return len(self.constituents)

    @cached_property
    def rho(self) -> ScalarField:
        total = sum(c.rho.data for c in self.constituents)
        return ScalarField(self.grid, total, self.constituents[0].rho.unit)

    @cached_property
    def rho_floor(self) -> float:
        return RHO_FLOOR_RELATIVE * float(np.mean(self.rho.data))

    def _checked_rho(self) -> np.ndarray:
        rho = self.rho.data
        bad = rho <= self.rho_floor
        if np.any(bad):
            raise FloorViolation(int(bad.sum()), self.rho_floor)
        return rho

    @cached_property
    def concentrations(self) -> list[ScalarField]:
        rho = self._checked_rho()
        return [ScalarField(self.grid, c.rho.data / rho) for c in self.constituents]

    @cached_property
    def mean_velocity(self) -> VectorField:
        rho = self._checked_rho()
        flux = sum(c.rho.data[..., None] * c.vel.data for c in self.constituents)
        return VectorField(self.grid, flux / rho[..., None], self.constituents[0].vel.unit)

    @cached_property
    def diffusion_velocities(self) -> list[VectorField]:
        v = self.mean_velocity.data
        return [VectorField(self.grid, c.vel.data - v) for c in self.constituents]

    @cached_property
    def total_stress(self) -> TensorField:
        total = sum(c.stress.data for c in self.constituents)
        return TensorField(self.grid, total, self.constituents[0].stress.unit)

    def _concentration_weighted(self, attr: str) -> VectorField:
        total = sum(cf.data[..., None] * getattr(c, attr).data
                    for cf, c in zip(self.concentrations, self.constituents))
        return VectorField(self.grid, total)

    @cached_property
    def total_body_force(self) -> VectorField:
        total = sum(cf.data[..., None] * c.body_force_total().data
                    for cf, c in zip(self.concentrations, self.constituents))
        return VectorField(self.grid, total)

    @cached_property
    def total_body_force_ni(self) -> VectorField:
        return self._concentration_weighted("body_force_ni")

    @cached_property
    def total_body_force_in(self) -> VectorField:
        return self._concentration_weighted("body_force_in")

    @cached_property
    def rho_dot(self) -> Optional[ScalarField]:
        if any(c.rho_dot is None for c in self.constituents):
            return None
        total = sum(c.rho_dot.data for c in self.constituents)
        return ScalarField(self.grid, total)

    def mean_acceleration(self) -> VectorField:
        """Mean-flow acceleration d v / d t + (grad v) v.

        Uses the attached analytic bundle when present, otherwise the
        constituents' stored time partials plus discrete gradients.
        """
        from . import diffops

        if self.analytic is not None and self.analytic.mixture_accel is not None:
            return VectorField(self.grid, self.analytic.mixture_accel)
        if any(c.rho_dot is None or c.vel_dot is None for c in self.constituents):
            raise ValueError("mean acceleration needs rho_dot and vel_dot time data")
        rho = self._checked_rho()
        rho_dot = sum(c.rho_dot.data for c in self.constituents)
        flux_dot = sum(
            c.rho_dot.data[..., None] * c.vel.data + c.rho.data[..., None] * c.vel_dot.data
            for c in self.constituents
        )
        v = self.mean_velocity
        dv_dt = (flux_dot - rho_dot[..., None] * v.data) / rho[..., None]
        adv = np.einsum("...ij,...j->...i", diffops.grad(v).data, v.data)
        return VectorField(self.grid, dv_dt + adv)


def aggregates(m: MixtureState):
    """Total density, concentrations, mean velocity, diffusion velocities."""
    return m.rho, m.concentrations, m.mean_velocity, m.diffusion_velocities


def totals(m: MixtureState):
    """Total body force and stress, plus the inertial split of the force."""
    return (
        m.total_body_force,
        m.total_stress,
        m.total_body_force_ni,
        m.total_body_force_in,
    )


@dataclass
class AnalyticConstituent:
    """Free analytic choices for one constituent of a manufactured state.

    ``vel`` may be an :class:`AnalyticVectorSpec` or any object with a
    ``sampled(grid, t) -> SampledVector`` method, so derived velocities
    (for example a mass-consistent complement) fit the same slot.
    """

    rho: AnalyticFieldSpec
    vel: object
    stress: Optional[AnalyticTensorSpec] = None
    growth_momentum: Optional[AnalyticVectorSpec] = None
    growth_moment: Optional[AnalyticVectorSpec] = None
    mass_growth: Optional[AnalyticFieldSpec] = None
    internal_energy: Optional[AnalyticFieldSpec] = None
    heat_flux: Optional[AnalyticVectorSpec] = None
    heat_source: Optional[AnalyticFieldSpec] = None
    entropy: Optional[AnalyticFieldSpec] = None
    entropy_growth: Optional[AnalyticFieldSpec] = None
    entropy_flux: Optional[AnalyticVectorSpec] = None
    entropy_source: Optional[AnalyticFieldSpec] = None
    metric: Optional[AnalyticTensorSpec] = None
    name: str = ""

    def to_dict(self) -> dict:
        doc = {"rho": self.rho.to_dict(), "name": self.name}
        if not hasattr(self.vel, "to_dict"):
            raise ValueError("derived velocities are not serializable")
        doc["vel"] = self.vel.to_dict()
        for attr in ("stress", "growth_momentum", "growth_moment", "mass_growth",
                     "internal_energy", "heat_flux", "heat_source", "entropy",
                     "entropy_growth", "entropy_flux", "entropy_source", "metric"):
            value = getattr(self, attr)
            if value is not None:
                doc[attr] = value.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "AnalyticConstituent":
        kinds = {
            "stress": AnalyticTensorSpec, "growth_momentum": AnalyticVectorSpec,
            "growth_moment": AnalyticVectorSpec, "mass_growth": AnalyticFieldSpec,
            "internal_energy": AnalyticFieldSpec, "heat_flux": AnalyticVectorSpec,
            "heat_source": AnalyticFieldSpec, "entropy": AnalyticFieldSpec,
            "entropy_growth": AnalyticFieldSpec, "entropy_flux": AnalyticVectorSpec,
            "entropy_source": AnalyticFieldSpec, "metric": AnalyticTensorSpec,
        }
        kwargs = {
            "rho": AnalyticFieldSpec.from_dict(doc["rho"]),
            "vel": AnalyticVectorSpec.from_dict(doc["vel"]),
            "name": doc.get("name", ""),
        }
        for attr, kind in kinds.items():
            if attr in doc:
                kwargs[attr] = kind.from_dict(doc[attr])
        return cls(**kwargs)


@dataclass
class AnalyticMixture:
    """Time-parametrized manufactured mixture: a list of analytic
    constituents evaluated on demand at any time."""

    constituents: list[AnalyticConstituent]

    def state(self, grid: Grid, t: float) -> MixtureState:
        """Evaluate the raw specs into a state with an analytic bundle.

        No closure is applied here; growth and force fields default to
        whatever the specs say (zero when absent).
        """
        states = []
        bundle = []
        for spec in self.constituents:
            rho_s = spec.rho.sampled(grid, t)
            vel_s = spec.vel.sampled(grid, t)
            accel = vel_s.dt + np.einsum("...ij,...j->...i", vel_s.grad(), vel_s.value)
            stress_s = spec.stress.sampled(grid, t) if spec.stress is not None else None
            eps_s = spec.internal_energy.sampled(grid, t) if spec.internal_energy is not None else None
            flux_s = spec.heat_flux.sampled(grid, t) if spec.heat_flux is not None else None
            metric_s = spec.metric.sampled(grid, t) if spec.metric is not None else None

            def vec(field_spec):
                return field_spec.field(grid, t) if field_spec is not None else None

            def sca(field_spec):
                return field_spec.field(grid, t) if field_spec is not None else None

            states.append(ConstituentState(
                rho=ScalarField(grid, rho_s.value),
                vel=VectorField(grid, vel_s.value),
                accel=VectorField(grid, accel),
                stress=TensorField(grid, stress_s.value) if stress_s is not None else None,
                growth_momentum=vec(spec.growth_momentum),
                growth_moment=vec(spec.growth_moment),
                mass_growth=sca(spec.mass_growth),
                internal_energy=ScalarField(grid, eps_s.value) if eps_s is not None else None,
                heat_flux=VectorField(grid, flux_s.value) if flux_s is not None else None,
                heat_source=sca(spec.heat_source),
                entropy=sca(spec.entropy),
                entropy_growth=sca(spec.entropy_growth),
                entropy_flux=vec(spec.entropy_flux),
                entropy_source=sca(spec.entropy_source),
                metric=TensorField(grid, metric_s.value) if metric_s is not None else None,
                rho_dot=ScalarField(grid, rho_s.dt),
                vel_dot=VectorField(grid, vel_s.dt),
                eps_dot=ScalarField(grid, eps_s.dt) if eps_s is not None else None,
                name=spec.name,
            ))
            bundle.append(ConstituentAnalytic(
                rho=rho_s, vel=vel_s, stress=stress_s,
                internal_energy=eps_s, heat_flux=flux_s, metric=metric_s,
            ))
        analytic = MixtureAnalytic(bundle)
        analytic.mixture_accel = _mixture_accel(analytic)
        return MixtureState(states, t, analytic)

    def to_dict(self) -> dict:
        return {"constituents": [c.to_dict() for c in self.constituents]}

    @classmethod
    def from_dict(cls, doc: dict) -> "AnalyticMixture":
        return cls([AnalyticConstituent.from_dict(c) for c in doc["constituents"]])


def _mixture_accel(bundle: MixtureAnalytic) -> np.ndarray:
    v = bundle.mean_velocity()
    return v.dt + np.einsum("...ij,...j->...i", v.grad(), v.value)


def material_derivative_residual(
    m: MixtureState,
    lam_specs: Sequence[AnalyticFieldSpec | AnalyticVectorSpec],
    weighting: str = "concentration",
):
    """Residual of the mixture material-derivative identity.

    For per-constituent fields ``lam_a`` with mixture mean
    ``lam = sum c_a lam_a``, evaluates

        d lam / d t  -  sum c_a lam_a'  +  (1/rho) div(flux)  -  sum cdot_a lam_a

    where ``lam_a'`` follows constituent ``a`` and ``cdot_a`` is the mass
    growth. ``weighting`` picks the diffusive flux: ``"concentration"``
    uses ``sum c_a lam_a u_a`` (the identity as commonly quoted),
    ``"density"`` uses ``sum rho_a lam_a u_a`` (the form that actually
    closes; the two differ by a factor of total density).
    """
    if weighting not in ("concentration", "density"):
        raise ValueError(f"unknown weighting {weighting!r}")
    if m.analytic is None:
        raise ValueError("material derivative identity needs analytic time data")
    if len(lam_specs) != m.n_constituents:
        raise ValueError("one lambda spec per constituent required")
    if any(c.mass_growth is None for c in m.constituents):
        raise ValueError("mass growth fields must be populated")
    grid = m.grid
    t = m.t
    vector_valued = isinstance(lam_specs[0], AnalyticVectorSpec)
    bundle = m.analytic
    rho = bundle.rho_total()
    v = bundle.mean_velocity()
    conc = [c.rho / rho for c in bundle.constituents]
    lam_samples = [spec.sampled(grid, t) for spec in lam_specs]

    def scalar_residual(lams: list[SampledScalar]) -> np.ndarray:
        lam_mix = conc[0] * lams[0]
        for ca, la in zip(conc[1:], lams[1:]):
            lam_mix = lam_mix + ca * la
        lam_dot = lam_mix.dt + np.einsum("...i,...i->...", lam_mix.grad(), v.value)
        rhs = np.zeros(grid.shape)
        flux_div = np.zeros(grid.shape)
        for ca, la, cons, ban in zip(conc, lams, m.constituents, bundle.constituents):
            lam_prime = la.dt + np.einsum("...i,...i->...", la.grad(), ban.vel.value)
            rhs += ca.value * lam_prime
            rhs += cons.mass_growth.data * la.value
            u = ban.vel - v
            weight = ca if weighting == "concentration" else ban.rho
            flux_div += (u.scale(weight * la)).div()
        rhs -= flux_div / rho.value
        return lam_dot - rhs

    if not vector_valued:
        return ScalarField(grid, scalar_residual([s for s in lam_samples]))
    comps = [scalar_residual([s.c[i] for s in lam_samples]) for i in range(3)]
    return VectorField(grid, np.stack(comps, axis=-1))
