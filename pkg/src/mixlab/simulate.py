"""Explicit desk-scale simulator for a binary mixture on a periodic grid.

Mass and momentum are stepped in conservative flux form with RK4 and
central differences: barotropic constituent pressures, a symmetric drag
coupling whose momentum growths cancel pairwise by construction, and an
optional mass reaction whose growths cancel likewise. With periodic
boundaries every divergence integrates to zero exactly, so total mixture
mass and (without external forces) total momentum are conserved to
roundoff; the growth-term structure is what the conservation report
actually probes.

Exchanged mass carries the receiving constituent's velocity: the momentum
equation in conserved variables then needs no explicit exchange term, and
stored snapshots satisfy the constituent mass and momentum balances up to
stencil and time-differencing error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import backend
from .analytic import AnalyticFieldSpec, AnalyticVectorSpec
from .fields import Grid, Part, ScalarField, TensorField, VectorField, integrate_volume
from .mixture import ConstituentState, MixtureState

__all__ = [
    "CFLViolation",
    "NonFiniteState",
    "ConstituentScenario",
    "ScenarioConfig",
    "TrajectoryRecord",
    "step",
    "run",
    "uniform_drag_oracle",
]


class CFLViolation(RuntimeError):
    pass


class NonFiniteState(RuntimeError):
    pass


@dataclass
class ConstituentScenario:
    """Initial fields and barotropic law of one constituent."""

    name: str
    rho: AnalyticFieldSpec
    vel: AnalyticVectorSpec
    pressure_coeff: float = 1.0
    pressure_exponent: float = 1.4
    body_force: Optional[AnalyticVectorSpec] = None

    def __post_init__(self):
        if self.pressure_coeff < 0.0:
            raise ValueError("pressure coefficient must be nonnegative")
        if self.pressure_exponent < 1.0:
            raise ValueError("pressure exponent must be at least 1")

    def to_dict(self) -> dict:
        doc = {
            "name": self.name,
            "rho": self.rho.to_dict(),
            "vel": self.vel.to_dict(),
            "pressure_coeff": self.pressure_coeff,
            "pressure_exponent": self.pressure_exponent,
        }
        if self.body_force is not None:
            doc["body_force"] = self.body_force.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ConstituentScenario":
        return cls(
            name=doc.get("name", ""),
            rho=AnalyticFieldSpec.from_dict(doc["rho"]),
            vel=AnalyticVectorSpec.from_dict(doc["vel"]),
            pressure_coeff=float(doc.get("pressure_coeff", 1.0)),
            pressure_exponent=float(doc.get("pressure_exponent", 1.4)),
            body_force=AnalyticVectorSpec.from_dict(doc["body_force"]) if "body_force" in doc else None,
        )


@dataclass
class ScenarioConfig:
    """Binary-mixture scenario: grid, constituents, couplings, stepping."""

    grid: Grid
    constituents: tuple[ConstituentScenario, ConstituentScenario]
    drag: float = 0.0
    reaction_rate: float = 0.0
    cfl: float = 0.4
    duration: float = 1.0
    output_every: int = 1
    dt: Optional[float] = None

    def __post_init__(self):
        if len(self.constituents) != 2:
            raise ValueError("the simulator is binary: exactly two constituents")
        if self.drag < 0.0:
            raise ValueError("drag must be nonnegative")
        if not (0.0 < self.cfl <= 0.5):
            raise ValueError("CFL factor must be in (0, 0.5]")
        if not self.grid.periodic:
            raise ValueError("the simulator runs on periodic grids only")
        if self.output_every < 1:
            raise ValueError("output cadence must be at least 1")

    def to_dict(self) -> dict:
        doc = {
            "grid": self.grid.to_dict(),
            "constituents": [c.to_dict() for c in self.constituents],
            "drag": self.drag,
            "reaction_rate": self.reaction_rate,
            "cfl": self.cfl,
            "duration": self.duration,
            "output_every": self.output_every,
        }
        if self.dt is not None:
            doc["dt"] = self.dt
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        return cls(
            grid=Grid.from_dict(doc["grid"]),
            constituents=tuple(ConstituentScenario.from_dict(c) for c in doc["constituents"]),
            drag=float(doc.get("drag", 0.0)),
            reaction_rate=float(doc.get("reaction_rate", 0.0)),
            cfl=float(doc.get("cfl", 0.4)),
            duration=float(doc.get("duration", 1.0)),
            output_every=int(doc.get("output_every", 1)),
            dt=float(doc["dt"]) if "dt" in doc else None,
        )

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path) as handle:
            return cls.from_dict(json.load(handle))


def _pressure(cfg: ConstituentScenario, rho: np.ndarray) -> np.ndarray:
    return cfg.pressure_coeff * rho**cfg.pressure_exponent


def _sound_speed_sq(cfg: ConstituentScenario, rho: np.ndarray) -> np.ndarray:
    return cfg.pressure_coeff * cfg.pressure_exponent * rho ** (cfg.pressure_exponent - 1.0)


def _exchange(config: ScenarioConfig, rho: np.ndarray, vel: np.ndarray):
    """Momentum and mass growth force densities; pairwise antisymmetric."""
    rho_tot = rho[0] + rho[1]
    dv = vel[0] - vel[1]
    drag_force = -config.drag * (rho[0] * rho[1] / rho_tot)[..., None] * dv
    reaction = config.reaction_rate * rho[0] * rho[1] / rho_tot
    return drag_force, reaction


def _rhs(config: ScenarioConfig, rho: np.ndarray, mom: np.ndarray, bni: list[np.ndarray]):
    grid = config.grid
    h = grid.h
    vel = mom / rho[..., None]
    drag_force, reaction = _exchange(config, rho, vel)
    drho = np.empty_like(rho)
    dmom = np.empty_like(mom)
    for a in range(2):
        drho[a] = -sum(backend.diff_axis(mom[a][..., j], j, h, True) for j in range(3))
        p = _pressure(config.constituents[a], rho[a])
        sign = 1.0 if a == 0 else -1.0
        drho[a] += sign * reaction
        for i in range(3):
            adv = sum(
                backend.diff_axis(mom[a][..., i] * vel[a][..., j], j, h, True)
                for j in range(3)
            )
            dmom[a][..., i] = -adv - backend.diff_axis(p, i, h, True) + sign * drag_force[..., i]
            if bni[a] is not None:
                dmom[a][..., i] += rho[a] * bni[a][..., i]
    return drho, dmom


def _max_signal(config: ScenarioConfig, rho: np.ndarray, mom: np.ndarray) -> float:
    vel = mom / rho[..., None]
    worst = 0.0
    for a in range(2):
        speed = np.sqrt(np.einsum("...i,...i->...", vel[a], vel[a]))
        cs = np.sqrt(_sound_speed_sq(config.constituents[a], rho[a]))
        worst = max(worst, float(np.max(speed + cs)))
    return worst


def _check_cfl(config: ScenarioConfig, rho, mom, dt: float):
    worst = _max_signal(config, rho, mom)
    if worst > 0.0 and dt > config.cfl * config.grid.h / worst:
        raise CFLViolation(
            f"dt {dt:.3e} exceeds CFL bound {config.cfl * config.grid.h / worst:.3e}"
        )


def _rk4(config: ScenarioConfig, rho, mom, bni, dt: float):
    k1 = _rhs(config, rho, mom, bni)
    k2 = _rhs(config, rho + 0.5 * dt * k1[0], mom + 0.5 * dt * k1[1], bni)
    k3 = _rhs(config, rho + 0.5 * dt * k2[0], mom + 0.5 * dt * k2[1], bni)
    k4 = _rhs(config, rho + dt * k3[0], mom + dt * k3[1], bni)
    rho_new = rho + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    mom_new = mom + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    if not (np.all(np.isfinite(rho_new)) and np.all(np.isfinite(mom_new))):
        raise NonFiniteState("simulation blew up: non-finite fields")
    return rho_new, mom_new


def _initial_arrays(config: ScenarioConfig):
    grid = config.grid
    rho = np.stack([c.rho.values(grid, 0.0) for c in config.constituents])
    vel = np.stack([c.vel.values(grid, 0.0) for c in config.constituents])
    if np.any(rho <= 0.0):
        raise ValueError("initial densities must be positive")
    mom = rho[..., None] * vel
    return rho, mom


def _body_forces(config: ScenarioConfig, t: float) -> list[Optional[np.ndarray]]:
    return [
        c.body_force.values(config.grid, t) if c.body_force is not None else None
        for c in config.constituents
    ]


def build_state(config: ScenarioConfig, rho: np.ndarray, mom: np.ndarray, t: float) -> MixtureState:
    """Materialize raw arrays into a full mixture state with the scenario's
    constitutive fields (pressure stress, drag growth, reaction growth,
    pairwise-antisymmetric energy growth)."""
    grid = config.grid
    vel = mom / rho[..., None]
    drag_force, reaction = _exchange(config, rho, vel)
    rho_tot = rho[0] + rho[1]
    bni = _body_forces(config, t)
    heating = 0.5 * np.einsum("...i,...i->...", drag_force, vel[0] - vel[1])
    constituents = []
    for a in range(2):
        sign = 1.0 if a == 0 else -1.0
        p = _pressure(config.constituents[a], rho[a])
        stress = np.zeros(grid.shape + (3, 3))
        for i in range(3):
            stress[..., i, i] = -p
        constituents.append(ConstituentState(
            rho=ScalarField(grid, rho[a], "kg/m^3"),
            vel=VectorField(grid, vel[a], "m/s"),
            stress=TensorField(grid, stress, "Pa"),
            body_force_ni=VectorField(grid, bni[a]) if bni[a] is not None else None,
            growth_momentum=VectorField(grid, sign * drag_force / rho_tot[..., None]),
            mass_growth=ScalarField(grid, sign * reaction / rho_tot),
            energy_growth=ScalarField(grid, sign * heating / rho_tot),
            name=config.constituents[a].name,
        ))
    return MixtureState(constituents, t)


@dataclass
class TrajectoryRecord:
    """Equally spaced snapshots plus per-step conserved-quantity series."""

    config: ScenarioConfig
    dt: float
    times: list[float] = field(default_factory=list)
    snapshots: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    series: dict = field(default_factory=dict)

    @property
    def n_snapshots(self) -> int:
        return len(self.snapshots)

    def state(self, index: int) -> MixtureState:
        rho, mom = self.snapshots[index]
        return build_state(self.config, rho, mom, self.times[index])

    def state_with_time_data(self, index: int) -> MixtureState:
        """Snapshot state with time partials from central differences of
        the neighboring snapshots (needs 1 <= index <= n-2)."""
        if index < 1 or index > self.n_snapshots - 2:
            raise ValueError("central time differencing needs interior snapshots")
        m = self.state(index)
        spacing = self.times[index + 1] - self.times[index - 1]
        rho_p, mom_p = self.snapshots[index + 1]
        rho_m, mom_m = self.snapshots[index - 1]
        grid = self.config.grid
        from . import diffops
        from dataclasses import replace

        out = []
        for a, c in enumerate(m.constituents):
            rho_dot = (rho_p[a] - rho_m[a]) / spacing
            vel_p = mom_p[a] / rho_p[a][..., None]
            vel_m = mom_m[a] / rho_m[a][..., None]
            vel_dot = (vel_p - vel_m) / spacing
            grad_v = diffops.grad(c.vel).data
            accel = vel_dot + np.einsum("...ij,...j->...i", grad_v, c.vel.data)
            out.append(replace(
                c,
                rho_dot=ScalarField(grid, rho_dot),
                vel_dot=VectorField(grid, vel_dot),
                accel=VectorField(grid, accel),
            ))
        return MixtureState(out, m.t)

    def dump_csv(self, directory):
        """Write the conserved series and final snapshot fields as CSV."""
        import csv
        import os

        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, "series.csv"), "w", newline="") as handle:
            writer = csv.writer(handle)
            keys = sorted(k for k in self.series if k != "time")
            writer.writerow(["time", *keys])
            for i, t in enumerate(self.series["time"]):
                writer.writerow([repr(t)] + [repr(self.series[k][i]) for k in keys])
        from .fields import write_field_csv

        last = self.state(self.n_snapshots - 1)
        for a, c in enumerate(last.constituents):
            write_field_csv(c.rho, os.path.join(directory, f"rho_{a}.csv"))
            write_field_csv(c.vel, os.path.join(directory, f"vel_{a}.csv"))


def step(state: MixtureState, config: ScenarioConfig, dt: float) -> MixtureState:
    """Advance a two-constituent state by one RK4 step."""
    if state.n_constituents != 2:
        raise ValueError("the simulator is binary")
    rho = np.stack([c.rho.data for c in state.constituents])
    mom = np.stack([c.rho.data[..., None] * c.vel.data for c in state.constituents])
    _check_cfl(config, rho, mom, dt)
    bni = _body_forces(config, state.t)
    rho_new, mom_new = _rk4(config, rho, mom, bni, dt)
    return build_state(config, rho_new, mom_new, state.t + dt)


def run(config: ScenarioConfig):
    """Run the scenario; returns the trajectory and a conservation report."""
    grid = config.grid
    h3 = grid.h**3
    rho, mom = _initial_arrays(config)
    dt = config.dt
    if dt is None:
        # 0.9 leaves headroom for signal growth; the per-step check enforces
        # the exact bound.
        worst = _max_signal(config, rho, mom)
        dt = 0.9 * config.cfl * grid.h / worst if worst > 0 else config.duration / 100.0
    n_steps = max(1, int(np.ceil(config.duration / dt - 1e-12)))

    record = TrajectoryRecord(config, dt)
    series = {
        "time": [], "mass_mixture": [], "mass_0": [], "mass_1": [],
        "momentum_x": [], "momentum_y": [], "momentum_z": [], "kinetic_energy": [],
        "exchange_sum": [],
    }

    def log(t, rho, mom):
        series["time"].append(t)
        series["mass_0"].append(float(rho[0].sum() * h3))
        series["mass_1"].append(float(rho[1].sum() * h3))
        series["mass_mixture"].append(float((rho[0] + rho[1]).sum() * h3))
        total_mom = mom.sum(axis=(0, 1, 2, 3)) * h3
        series["momentum_x"].append(float(total_mom[0]))
        series["momentum_y"].append(float(total_mom[1]))
        series["momentum_z"].append(float(total_mom[2]))
        vel = mom / rho[..., None]
        speed2 = np.einsum("a...i,a...i->a...", vel, vel)
        series["kinetic_energy"].append(float(0.5 * (rho * speed2).sum() * h3))
        _, reaction = _exchange(config, rho, vel)
        gained = reaction.sum() * h3
        lost = (-reaction).sum() * h3
        series["exchange_sum"].append(float(abs(gained + lost)))

    log(0.0, rho, mom)
    record.times.append(0.0)
    record.snapshots.append((rho.copy(), mom.copy()))

    t = 0.0
    for istep in range(1, n_steps + 1):
        _check_cfl(config, rho, mom, dt)
        bni = _body_forces(config, t)
        rho, mom = _rk4(config, rho, mom, bni, dt)
        t = istep * dt
        log(t, rho, mom)
        if istep % config.output_every == 0 or istep == n_steps:
            record.times.append(t)
            record.snapshots.append((rho.copy(), mom.copy()))
    record.series = series

    mass0 = series["mass_mixture"][0]
    mass_drift = max(abs(v - mass0) for v in series["mass_mixture"]) / abs(mass0)
    per_mass_drift = []
    for key in ("mass_0", "mass_1"):
        m0 = series[key][0]
        per_mass_drift.append(max(abs(v - m0) for v in series[key]) / max(abs(m0), 1e-300))
    p0 = np.array([series["momentum_x"][0], series["momentum_y"][0], series["momentum_z"][0]])
    vel0 = mom / rho[..., None]
    momentum_scale = float(sum(
        (rho[a] * np.sqrt(np.einsum("...i,...i->...", vel0[a], vel0[a]))).sum() * h3
        for a in range(2)
    ))
    momentum_scale = max(momentum_scale, 1e-30)
    drift = 0.0
    for i in range(len(series["time"])):
        p = np.array([series["momentum_x"][i], series["momentum_y"][i], series["momentum_z"][i]])
        drift = max(drift, float(np.max(np.abs(p - p0))))
    report = {
        "steps": n_steps,
        "dt": dt,
        "mass_drift_mixture": mass_drift,
        "mass_drift_constituents": per_mass_drift,
        "momentum_drift_abs": drift,
        "momentum_scale": momentum_scale,
        "momentum_drift_relative": drift / momentum_scale,
        "exchange_sum_max": max(series["exchange_sum"]),
        "final_kinetic_energy": series["kinetic_energy"][-1],
    }
    return record, report


def uniform_drag_oracle(rho1: float, rho2: float, v1, v2, drag: float,
                        t_end: float, n_steps: int):
    """Two-body drag relaxation ODE integrated with RK4 at a fine step.

    For spatially uniform states the field equations reduce to this pair;
    the velocity difference decays like exp(-drag * t).
    """
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    rho = rho1 + rho2

    def rhs(u1, u2):
        dv = u1 - u2
        return -drag * rho2 / rho * dv, drag * rho1 / rho * dv

    dt = t_end / n_steps
    for _ in range(n_steps):
        k1 = rhs(v1, v2)
        k2 = rhs(v1 + 0.5 * dt * k1[0], v2 + 0.5 * dt * k1[1])
        k3 = rhs(v1 + 0.5 * dt * k2[0], v2 + 0.5 * dt * k2[1])
        k4 = rhs(v1 + dt * k3[0], v2 + dt * k3[1])
        v1 = v1 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        v2 = v2 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return v1, v2
