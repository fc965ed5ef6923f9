"""External power functionals, rigid observer changes and invariance gaps.

The external power on a part pairs body forces and boundary tractions
with a velocity, and the inter-constituent growths with that velocity and
its curl. Shifting all constituent velocities by a rigid field changes
the power by a translation part contracted with a force gap and a
rotation part contracted with a couple gap; with this module's quadrature
that decomposition is exact in floating point, provided the part keeps a
two-node margin so no stencil or face neighbor crosses a periodic seam
(rigid fields are linear in position and not periodic).

The couple gap carries the moment growth with a factor 2 by default:
the power works the moment growth against the curl of the velocity, and
the curl of a rigid field is twice its rotation rate. ``moment_factor=1``
reproduces the coefficient-1 couple integral instead; reports record the
factor in force.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import diffops
from .fields import Grid, Part, ScalarField, TensorField, VectorField, integrate_surface, integrate_volume
from .mixture import MixtureState

__all__ = [
    "ObserverChange",
    "rigid_velocity",
    "transform_velocities",
    "constituent_power",
    "mixture_power",
    "invariance_gaps",
    "power_shift",
    "total_power_gap",
    "sample_observers",
    "sample_parts",
]


def _as_vec_fn(value) -> Callable[[float], np.ndarray]:
    if callable(value):
        return lambda t: np.asarray(value(t), dtype=np.float64)
    arr = np.asarray(value, dtype=np.float64)
    return lambda t: arr


@dataclass
class ObserverChange:
    """Rigid observer data: translation velocity, rotation rate, pivot.

    ``trans`` and ``rot`` are constant 3-vectors or callables of time.
    Kinds: ``general``; ``galilean`` (constant translation, no rotation);
    ``rotational`` (no translation, constant rotation rate).
    """

    trans: object = (0.0, 0.0, 0.0)
    rot: object = (0.0, 0.0, 0.0)
    pivot: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kind: str = "general"

    def __post_init__(self):
        if self.kind not in ("general", "galilean", "rotational"):
            raise ValueError(f"unknown observer kind {self.kind!r}")
        if self.kind == "galilean":
            if callable(self.trans):
                raise ValueError("galilean observers need a constant translation")
            if np.any(np.asarray(self._rot(0.0)) != 0.0):
                raise ValueError("galilean observers cannot rotate")
        if self.kind == "rotational":
            if callable(self.rot):
                raise ValueError("rotational observers need a constant rotation rate")
            if np.any(np.asarray(self._trans(0.0)) != 0.0):
                raise ValueError("rotational observers cannot translate")

    def _trans(self, t: float) -> np.ndarray:
        return _as_vec_fn(self.trans)(t)

    def _rot(self, t: float) -> np.ndarray:
        return _as_vec_fn(self.rot)(t)

    def translation(self, t: float = 0.0) -> np.ndarray:
        return self._trans(t)

    def rotation_rate(self, t: float = 0.0) -> np.ndarray:
        return self._rot(t)

    @classmethod
    def identity(cls) -> "ObserverChange":
        return cls()


def rigid_velocity(o: ObserverChange, grid: Grid, t: float = 0.0) -> VectorField:
    """Rigid field trans + rot x (x - pivot) sampled at the nodes."""
    c = o.translation(t)
    q = o.rotation_rate(t)
    r = grid.positions().data - np.asarray(o.pivot)
    data = c + np.cross(np.broadcast_to(q, r.shape), r)
    return VectorField(grid, data)


def transform_velocities(m: MixtureState, o: ObserverChange, t: Optional[float] = None) -> MixtureState:
    """Shift every constituent velocity by the observer's rigid field.

    Only the velocities change; accelerations, time partials and the
    analytic bundle are dropped since they refer to the old observer.
    """
    from dataclasses import replace

    tt = m.t if t is None else t
    shift = rigid_velocity(o, m.grid, tt).data
    moved = [
        replace(c, vel=VectorField(m.grid, c.vel.data + shift), rho_dot=None, vel_dot=None)
        for c in m.constituents
    ]
    return MixtureState(moved, m.t, analytic=None)


def _traction_power_field(stress: TensorField, w: np.ndarray) -> VectorField:
    """Vector field whose flux is the boundary traction power."""
    data = np.einsum("...ij,...i->...j", stress.data, w)
    return VectorField(stress.grid, data)


def constituent_power(m: MixtureState, alpha: int, p: Part,
                      velocity: Optional[VectorField] = None) -> float:
    """External power on one constituent over a part.

    Body force, boundary traction, momentum growth and moment growth
    terms, the last paired with the curl of the working velocity. The
    working velocity defaults to the constituent's own velocity; the rule
    of total power evaluates it on the mixture mean velocity instead.
    """
    c = m.constituents[alpha]
    w = (velocity or c.vel).data
    rho = m.rho.data
    body = integrate_volume(
        ScalarField(m.grid, np.einsum("...i,...i->...", c.rho.data[..., None] * c.body_force_total().data, w)), p
    )
    traction = integrate_surface(_traction_power_field(c.stress, w), p)
    growth = integrate_volume(
        ScalarField(m.grid, rho * np.einsum("...i,...i->...", c.growth_momentum.data, w)), p
    )
    curl_w = diffops.curl(VectorField(m.grid, w)).data
    moment = integrate_volume(
        ScalarField(m.grid, rho * np.einsum("...i,...i->...", c.growth_moment.data, curl_w)), p
    )
    return body + traction + growth + moment


def mixture_power(m: MixtureState, p: Part, velocity: Optional[VectorField] = None) -> float:
    """External power on the mixture as a single body over a part."""
    w = (velocity or m.mean_velocity).data
    rho = m.rho.data
    body = integrate_volume(
        ScalarField(m.grid, rho * np.einsum("...i,...i->...", m.total_body_force.data, w)), p
    )
    traction = integrate_surface(_traction_power_field(m.total_stress, w), p)
    return body + traction


def _moment_arm(grid: Grid, pivot) -> np.ndarray:
    return grid.positions().data - np.asarray(pivot, dtype=np.float64)


def invariance_gaps(
    m: MixtureState,
    alpha: int,
    p: Part,
    pivot=(0.0, 0.0, 0.0),
    moment_factor: float = 2.0,
    form: str = "surface",
) -> tuple[np.ndarray, np.ndarray]:
    """Integral force and couple gaps of one constituent on a part.

    ``form="surface"`` evaluates boundary tractions by quadrature, which
    is the combination whose contraction with (translation, rotation)
    exactly reproduces the power change under the observer shift.
    ``form="volume"`` localizes the traction integrals with the discrete
    divergence; the two agree to stencil truncation.
    """
    if form not in ("surface", "volume"):
        raise ValueError(f"unknown form {form!r}")
    c = m.constituents[alpha]
    rho = m.rho.data
    r = _moment_arm(m.grid, pivot)
    body = c.rho.data[..., None] * c.body_force_total().data
    growth = rho[..., None] * c.growth_momentum.data
    mu = rho[..., None] * c.growth_moment.data

    if form == "surface":
        force = (
            integrate_volume(VectorField(m.grid, body + growth), p)
            + integrate_surface(c.stress, p)
        )
        arm_stress = np.einsum("ijk,...j,...kl->...il", diffops.alternating_symbol(), r, c.stress.data)
        couple = (
            integrate_volume(VectorField(m.grid, np.cross(r, body + growth) + moment_factor * mu), p)
            + integrate_surface(TensorField(m.grid, arm_stress), p)
        )
        return np.asarray(force), np.asarray(couple)

    div_t = diffops.div(c.stress).data
    resultant = body + growth + div_t
    force = integrate_volume(VectorField(m.grid, resultant), p)
    twice_axial = 2.0 * diffops.axial(c.stress).data
    couple = integrate_volume(
        VectorField(m.grid, np.cross(r, resultant) + twice_axial + moment_factor * mu), p
    )
    return np.asarray(force), np.asarray(couple)


def power_shift(m: MixtureState, alpha: int, p: Part, o: ObserverChange,
                t: Optional[float] = None) -> float:
    """Observed power change of one constituent under an observer shift."""
    before = constituent_power(m, alpha, p)
    after = constituent_power(transform_velocities(m, o, t), alpha, p)
    return after - before


def total_power_gap(
    m: MixtureState,
    p: Part,
    pivot=(0.0, 0.0, 0.0),
    moment_factor: float = 2.0,
):
    """Rule-of-total-power diagnostics on a part.

    Returns ``(force, couple, raw)``: the growth-sum force and couple
    integrals that the rule reduces to for rigid velocities, and a
    callable ``raw(velocity)`` evaluating the mixture power minus the sum
    of constituent powers at an arbitrary velocity field.
    """
    rho = m.rho.data
    msum, musum = _growth_sums(m)
    r = _moment_arm(m.grid, pivot)
    force = integrate_volume(VectorField(m.grid, rho[..., None] * msum), p)
    couple = integrate_volume(
        VectorField(m.grid, np.cross(r, rho[..., None] * msum) + moment_factor * rho[..., None] * musum), p
    )

    def raw(velocity: VectorField) -> float:
        total = mixture_power(m, p, velocity=velocity)
        parts = sum(constituent_power(m, a, p, velocity=velocity) for a in range(m.n_constituents))
        return total - parts

    return np.asarray(force), np.asarray(couple), raw


def _growth_sums(m: MixtureState) -> tuple[np.ndarray, np.ndarray]:
    msum = sum(c.growth_momentum.data for c in m.constituents)
    musum = sum(c.growth_moment.data for c in m.constituents)
    return msum, musum


def sample_observers(seed: int, grid: Grid, n_random: int = 10) -> list[ObserverChange]:
    """Axis translations, axis rotations, and random unit-ball draws.

    Deterministic under the seed; the pivot sits at the domain center.
    """
    center = tuple(
        o + 0.5 * h * (n - 1)
        for o, n, h in zip(grid.origin, grid.shape, (grid.h,) * 3)
    )
    obs = []
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = 1.0
        obs.append(ObserverChange(trans=tuple(e), kind="galilean"))
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = 1.0
        obs.append(ObserverChange(rot=tuple(e), pivot=center, kind="rotational"))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        c = _unit_ball(rng)
        q = _unit_ball(rng)
        obs.append(ObserverChange(trans=tuple(c), rot=tuple(q), pivot=center))
    return obs


def _unit_ball(rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.uniform(-1.0, 1.0, 3)
        if np.dot(v, v) <= 1.0:
            return v


def sample_parts(grid: Grid, seed: int, n_scales: int = 3, n_placements: int = 5,
                 margin: int = 2) -> list[Part]:
    """Nested box parts at several scales and random placements.

    All parts keep the margin needed for exact rigid-field identities.
    """
    rng = np.random.default_rng(seed)
    n = min(grid.shape)
    usable = n - 2 * margin
    if usable < 3:
        raise ValueError("grid too small for part sampling at this margin")
    sizes = sorted({max(2, round(usable * f)) for f in np.linspace(0.3, 1.0, n_scales)})
    parts = []
    for size in sizes:
        for _ in range(n_placements):
            starts = [margin + int(rng.integers(0, grid.shape[a] - 2 * margin - size + 1))
                      if grid.shape[a] - 2 * margin - size > 0 else margin
                      for a in range(3)]
            parts.append(Part(
                starts[0], starts[0] + size,
                starts[1], starts[1] + size,
                starts[2], starts[2] + size,
            ))
    return parts


def shrinking_parts(center: tuple[int, int, int], sizes: Sequence[int]) -> list[Part]:
    """Nested parts around a node, for localization checks."""
    out = []
    for size in sizes:
        half = size // 2
        lo = [c - half for c in center]
        out.append(Part(lo[0], lo[0] + size, lo[1], lo[1] + size, lo[2], lo[2] + size))
    return out
