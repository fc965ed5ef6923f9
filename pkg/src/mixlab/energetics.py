"""Kinetic-energy identities, energy balances and the entropy margin.

Time derivatives of part integrals use second-order central differencing
of a time-parametrized state (any callable ``t -> MixtureState``), so
residual tolerances combine a stencil part and a time-step part.

Sign conventions: the printed forms of the kinetic-energy transport
theorem and the constituent kinetic-energy rule circulating in the
mixture literature disagree on the boundary-flux sign. Both evaluators
take a ``flux_sign`` whose default is the convention that actually closes
(confirmed empirically by the tests and recorded in reports): the
transport theorem carries the outflux with a minus sign on its right side
and the kinetic-energy rule then needs the opposite sign so that the two
combine into the pointwise inertial-force rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import diffops
from .fields import Part, ScalarField, TensorField, VectorField, integrate_surface, integrate_volume
from .mixture import MixtureState

__all__ = [
    "kinetic_transport_residual",
    "constituent_kinetic_energy_residual",
    "inertial_power_integrand",
    "MixtureKineticEnergy",
    "mixture_kinetic_energy_residual",
    "constituent_energy_residual",
    "energy_form_difference",
    "close_energy_growth",
    "energy_growth_sum",
    "entropy_margin",
]

States = Callable[[float], MixtureState]


def _ddt(integral: Callable[[MixtureState], float], states: States, t: float, dt: float) -> float:
    return (integral(states(t + dt)) - integral(states(t - dt))) / (2.0 * dt)


def _kinetic_density(m: MixtureState, alpha: int) -> ScalarField:
    c = m.constituents[alpha]
    speed2 = np.einsum("...i,...i->...", c.vel.data, c.vel.data)
    return ScalarField(m.grid, 0.5 * c.rho.data * speed2)


def kinetic_transport_residual(states: States, alpha: int, p: Part, t: float,
                               dt: float, flux_sign: float = -1.0) -> float:
    """Transport-theorem residual for one constituent's kinetic energy.

    Compares d/dt of the kinetic energy in a fixed part against the
    acceleration power, the mass-growth contribution and the boundary
    outflux (single factor one half, sign from ``flux_sign``; the default
    -1 closes the identity).
    """
    m = states(t)
    c = m.constituents[alpha]
    lhs = _ddt(lambda s: integrate_volume(_kinetic_density(s, alpha), p), states, t, dt)
    accel_power = integrate_volume(
        ScalarField(m.grid, c.rho.data * np.einsum("...i,...i->...", c.accel.data, c.vel.data)), p
    )
    speed2 = np.einsum("...i,...i->...", c.vel.data, c.vel.data)
    growth = integrate_volume(
        ScalarField(m.grid, 0.5 * m.rho.data * c.mass_growth.data * speed2), p
    )
    flux = integrate_surface(
        VectorField(m.grid, (0.5 * c.rho.data * speed2)[..., None] * c.vel.data), p
    )
    return lhs - (accel_power + growth + flux_sign * flux)


def constituent_kinetic_energy_residual(states: States, alpha: int, p: Part, t: float,
                                        dt: float, flux_sign: float = 1.0) -> float:
    """Kinetic-energy / inertial-power rule for one constituent.

    Sum of: d/dt of the part's kinetic energy, the boundary term (half
    the kinetic outflux, sign ``flux_sign``; +1 makes the rule equal the
    pointwise inertial integrand), half the mass-growth kinetic term, and
    the inertial body-force power. Vanishes when the inertial body force
    carries exactly the acceleration and the mass-growth momentum.
    """
    m = states(t)
    c = m.constituents[alpha]
    lhs = _ddt(lambda s: integrate_volume(_kinetic_density(s, alpha), p), states, t, dt)
    speed2 = np.einsum("...i,...i->...", c.vel.data, c.vel.data)
    flux = integrate_surface(
        VectorField(m.grid, (0.5 * c.rho.data * speed2)[..., None] * c.vel.data), p
    )
    growth = integrate_volume(
        ScalarField(m.grid, 0.5 * m.rho.data * c.mass_growth.data * speed2), p
    )
    inertial = integrate_volume(
        ScalarField(m.grid, c.rho.data * np.einsum("...i,...i->...", c.body_force_in.data, c.vel.data)), p
    )
    return lhs + flux_sign * flux + growth + inertial


def inertial_power_integrand(m: MixtureState, alpha: int, p: Part) -> float:
    """Rearranged form of the kinetic-energy rule:
    integral of (rho_a accel + rho mass_growth vel + rho_a b_in) . vel."""
    c = m.constituents[alpha]
    stuff = (
        c.rho.data[..., None] * c.accel.data
        + (m.rho.data * c.mass_growth.data)[..., None] * c.vel.data
        + c.rho.data[..., None] * c.body_force_in.data
    )
    return integrate_volume(
        ScalarField(m.grid, np.einsum("...i,...i->...", stuff, c.vel.data)), p
    )


@dataclass
class MixtureKineticEnergy:
    residual: float
    flux_term: float
    production_term: float
    mean_flux_term: float


def mixture_kinetic_energy_residual(states: States, p: Part, t: float, dt: float,
                                    form: str = "as-printed") -> MixtureKineticEnergy:
    """Kinetic-energy balance of the whole mixture on a fixed part.

    The diffusive boundary term (flow of kinetic energy carried by the
    relative motion) and the production term (diffusive stress against
    the mean velocity gradient) are returned separately, with the
    weighting the active form uses.

    ``form="as-printed"`` adds concentration-weighted diffusive flux and
    production and omits the mean-flow kinetic outflux; it closes only
    when the constituents co-move and the part carries no net boundary
    flux. ``"transport-consistent"`` is the identity the balances imply:
    mean outflux plus density-weighted diffusive flux minus
    density-weighted production; it closes on any part of a state whose
    mass and momentum balances hold.
    """
    if form not in ("as-printed", "transport-consistent"):
        raise ValueError(f"unknown form {form!r}")
    m = states(t)

    def mean_ke(s: MixtureState) -> float:
        v = s.mean_velocity.data
        return integrate_volume(
            ScalarField(s.grid, 0.5 * s.rho.data * np.einsum("...i,...i->...", v, v)), p
        )

    lhs = _ddt(mean_ke, states, t, dt)
    v = m.mean_velocity
    weighting = "concentration" if form == "as-printed" else "density"
    flux_data = np.zeros(m.grid.shape + (3,))
    for conc, cons, u in zip(m.concentrations, m.constituents, m.diffusion_velocities):
        w = conc.data if weighting == "concentration" else cons.rho.data
        flux_data += w[..., None] * np.einsum("...i,...i->...", u.data, v.data)[..., None] * u.data
    flux_term = integrate_surface(VectorField(m.grid, flux_data), p)

    from .balances import diffusive_stress

    d = diffusive_stress(m, weighting=weighting)
    grad_v = diffops.grad(v).data
    production_term = integrate_volume(
        ScalarField(m.grid, np.einsum("...ij,...ij->...", d.data, grad_v)), p
    )
    inertial = integrate_volume(
        ScalarField(m.grid, m.rho.data * np.einsum("...i,...i->...", m.total_body_force_in.data, v.data)), p
    )
    speed2 = np.einsum("...i,...i->...", v.data, v.data)
    mean_flux_term = integrate_surface(
        VectorField(m.grid, (0.5 * m.rho.data * speed2)[..., None] * v.data), p
    )
    if form == "as-printed":
        residual = lhs + flux_term + production_term + inertial
    else:
        residual = lhs + mean_flux_term + flux_term - production_term + inertial
    return MixtureKineticEnergy(residual, flux_term, production_term, mean_flux_term)


def _grad_scalar(m: MixtureState, alpha: int, field: ScalarField, space: str,
                 analytic_attr: str) -> np.ndarray:
    if space == "discrete":
        return diffops.grad(field).data
    bundle = m.analytic
    if bundle is None or getattr(bundle.constituents[alpha], analytic_attr) is None:
        raise ValueError("analytic derivatives unavailable for this state")
    return getattr(bundle.constituents[alpha], analytic_attr).grad()


def constituent_energy_residual(m: MixtureState, alpha: int,
                                supply_form: str = "simple",
                                space: str = "discrete") -> ScalarField:
    """Pointwise energy-balance residual for one constituent.

    ``supply_form="simple"`` treats the interaction supply as a plain
    growth of internal energy: the stress works against the symmetric
    velocity gradient only. ``supply_form="truesdell"`` also counts the
    momentum-growth power and the kinetic part of exchanged mass as
    energy supply: the stress works against the full velocity gradient,
    the momentum-growth power enters explicitly and half the exchanged
    kinetic energy is removed.
    """
    if supply_form not in ("simple", "truesdell"):
        raise ValueError(f"unknown supply form {supply_form!r}")
    if space not in ("discrete", "analytic"):
        raise ValueError(f"unknown derivative mode {space!r}")
    c = m.constituents[alpha]
    if c.eps_dot is None:
        raise ValueError("energy residual needs eps_dot time data")
    rho = m.rho.data
    grad_eps = _grad_scalar(m, alpha, c.internal_energy, space, "internal_energy")
    eps_material = c.eps_dot.data + np.einsum("...i,...i->...", grad_eps, c.vel.data)
    if space == "discrete":
        grad_vel = diffops.grad(c.vel).data
        div_q = diffops.div(c.heat_flux).data
    else:
        bundle = m.analytic
        ca = bundle.constituents[alpha]
        if ca.heat_flux is None:
            raise ValueError("analytic heat flux unavailable")
        grad_vel = ca.vel.grad()
        div_q = ca.heat_flux.div()
    r = (
        c.rho.data * eps_material
        + rho * c.mass_growth.data * c.internal_energy.data
        - rho * c.energy_growth.data
        - div_q
        - c.rho.data * c.heat_source.data
    )
    if supply_form == "simple":
        sym_grad = 0.5 * (grad_vel + np.swapaxes(grad_vel, -1, -2))
        r = r - np.einsum("...ij,...ij->...", c.stress.data, sym_grad)
    else:
        r = r + rho * np.einsum("...i,...i->...", c.growth_momentum.data, c.vel.data)
        r = r - np.einsum("...ij,...ij->...", c.stress.data, grad_vel)
        speed2 = np.einsum("...i,...i->...", c.vel.data, c.vel.data)
        r = r - 0.5 * rho * c.mass_growth.data * speed2
    return ScalarField(m.grid, r)


def energy_form_difference(m: MixtureState, alpha: int) -> ScalarField:
    """Closed-form difference of the two supply forms:
    rho mgrow . vel - stress : skw grad vel - half rho mass_growth |vel|^2."""
    c = m.constituents[alpha]
    rho = m.rho.data
    grad_vel = diffops.grad(c.vel).data
    skw_grad = 0.5 * (grad_vel - np.swapaxes(grad_vel, -1, -2))
    speed2 = np.einsum("...i,...i->...", c.vel.data, c.vel.data)
    data = (
        rho * np.einsum("...i,...i->...", c.growth_momentum.data, c.vel.data)
        - np.einsum("...ij,...ij->...", c.stress.data, skw_grad)
        - 0.5 * rho * c.mass_growth.data * speed2
    )
    return ScalarField(m.grid, data)


def close_energy_growth(m: MixtureState, supply_form: str = "simple",
                        space: str = "analytic") -> MixtureState:
    """Return a state whose energy growths make the chosen balance hold
    pointwise; other fields are shared with the input state."""
    from dataclasses import replace

    new = []
    for alpha, c in enumerate(m.constituents):
        zeroed = replace(c, energy_growth=ScalarField.zeros(m.grid))
        probe = MixtureState(
            [zeroed if i == alpha else other for i, other in enumerate(m.constituents)],
            m.t, m.analytic,
        )
        r = constituent_energy_residual(probe, alpha, supply_form, space)
        growth = ScalarField(m.grid, r.data / m.rho.data)
        new.append(replace(c, energy_growth=growth))
    return MixtureState(new, m.t, m.analytic)


def energy_growth_sum(m: MixtureState) -> ScalarField:
    total = sum(c.energy_growth.data for c in m.constituents)
    return ScalarField(m.grid, total)


def entropy_margin(states: States, alpha: int, p: Part, t: float, dt: float) -> float:
    """Entropy-inequality margin for one constituent on a part.

    d/dt of the part's entropy minus growth, minus boundary flux
    (contracted with the outward normal), plus the source integral.
    Negative margins beyond tolerance flag a violation.
    """
    m = states(t)
    c = m.constituents[alpha]

    def entropy_content(s: MixtureState) -> float:
        cc = s.constituents[alpha]
        return integrate_volume(ScalarField(s.grid, cc.rho.data * cc.entropy.data), p)

    lhs = _ddt(entropy_content, states, t, dt)
    growth = integrate_volume(ScalarField(m.grid, m.rho.data * c.entropy_growth.data), p)
    flux = integrate_surface(c.entropy_flux, p)
    source = integrate_volume(ScalarField(m.grid, c.rho.data * c.entropy_source.data), p)
    return lhs - growth - flux + source
