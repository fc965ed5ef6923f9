"""Verification suites: operator convergence, theorem checks in both
directions, energetics, covariance and simulator conservation.

Each suite builds deterministic manufactured states from a seed, runs its
checks at the plan's grid sizes, and returns a report whose rows carry
(equation id, variant, norms, tolerance, verdict). Discretization-level
tolerances are Richardson calibrated: the constant is estimated on the
coarsest grid and applied at the finer ones with a safety factor.
Convention adjudication rows assert both that the closing convention
closes and that the rejected one misses by a wide ratio, so reports name
conventions rather than silently assuming them.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import balances, covariance, energetics, power, simulate
from .analytic import AnalyticFieldSpec, AnalyticVectorSpec
from .fields import Grid, Part, ScalarField, VectorField, integrate_volume
from .mixture import AnalyticMixture, MixtureState
from .report import ResidualRow, SuiteReport

__all__ = ["VerificationPlan", "DEFAULT_TOLERANCES", "run_suite", "run_plan", "SUITES"]

DEFAULT_TOLERANCES = {
    "order_window": 0.25,
    "identity_abs": 1e-12,
    "decomposition_rel": 1e-12,
    "exact_small": 1e-12,
    "algebraic": 1e-13,
    "richardson_safety": 3.0,
    "discrimination_ratio": 0.05,
    "fd_metric": 1e-8,
    "cross_module_rel": 1e-10,
    "growth_sum_sim": 1e-14,
    "sim_mass_rel": 1e-12,
    "sim_momentum_rel": 1e-10,
    "sim_ode_rel": 1e-4,
    "sim_halving_factor": 3.0,
    "time_step_fd": 2e-4,
}


@dataclass
class VerificationPlan:
    """What to run, at which sizes, under which seed and tolerances."""

    suites: list[str] = field(default_factory=lambda: list(SUITES))
    scenario: str | None = None
    operator_sizes: list[int] = field(default_factory=lambda: [16, 32, 64])
    state_sizes: list[int] = field(default_factory=lambda: [16, 32])
    seed: int = 1234
    out_dir: str = "reports"
    kappa: float = balances.KAPPA_HALF_SKEW
    tolerances: dict = field(default_factory=dict)
    # Constant added to the first constituent's momentum growth after
    # closure; breaks self-equilibration on purpose so the theorem suites
    # must fail with a force gap equal to its density integral.
    perturb_growth: list | None = None

    def __post_init__(self):
        if not self.suites:
            raise ValueError("a verification plan needs at least one suite")
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ValueError(f"unknown suites: {unknown}")
        if len(self.state_sizes) < 2:
            raise ValueError("state checks need two grid sizes for calibration")
        if any(n % 8 for n in list(self.state_sizes) + list(self.operator_sizes)):
            raise ValueError("grid sizes must be multiples of 8 so probe parts share "
                             "physical boxes across sizes")

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def to_dict(self) -> dict:
        return {
            "suites": self.suites,
            "scenario": self.scenario,
            "operator_sizes": self.operator_sizes,
            "state_sizes": self.state_sizes,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "kappa": self.kappa,
            "tolerances": self.tolerances,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VerificationPlan":
        kwargs = {}
        for key in ("suites", "scenario", "operator_sizes", "state_sizes", "seed",
                    "out_dir", "kappa", "tolerances", "perturb_growth"):
            if key in doc:
                kwargs[key] = doc[key]
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "VerificationPlan":
        with open(path) as handle:
            return cls.from_dict(json.load(handle))


def _mixture_for(plan: VerificationPlan, **kwargs) -> AnalyticMixture:
    if plan.scenario:
        with open(plan.scenario) as handle:
            doc = json.load(handle)
        if "constituents" in doc:
            return AnalyticMixture.from_dict(doc)
        kwargs = {**doc.get("builtin_args", {}), **kwargs}
    return balances.trig_binary_mixture(seed=plan.seed, **kwargs)


def _linf(data: np.ndarray) -> float:
    return float(np.max(np.abs(data)))


def _l2(data: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(data))))


def _interior(n: int, margin: int = 2) -> tuple[slice, ...]:
    return (slice(margin, n - margin),) * 3


def _order(coarse_err: float, fine_err: float, coarse_n: int, fine_n: int) -> float:
    return float(np.log(coarse_err / fine_err) / np.log(fine_n / coarse_n))


def suite_operators(plan: VerificationPlan) -> SuiteReport:
    from . import diffops
    from .analytic import AxisFactor, Term

    rep = SuiteReport("operators", plan.seed)
    sizes = plan.operator_sizes
    if any(n % 8 for n in sizes):
        raise ValueError("operator sizes must be multiples of 8 (shared physical parts)")
    rng = np.random.default_rng(plan.seed)
    spec = balances._trig(rng, "xyz", 1.0)
    vec_spec = AnalyticVectorSpec(tuple(balances._trig(rng, "xyz", 1.0) for _ in range(3)))
    # Deterministic flux field whose stencil-error integrand keeps one sign
    # over the probe part, so the divergence-theorem gap converges cleanly.
    gap_spec = AnalyticVectorSpec((
        AnalyticFieldSpec([Term(1.0, x=AxisFactor("sin", freq=1.0, phase=0.2))]),
        AnalyticFieldSpec([Term(0.7, y=AxisFactor("sin", freq=1.0, phase=2.0))]),
        AnalyticFieldSpec([Term(0.5, z=AxisFactor("cos", freq=1.0, phase=0.4))]),
    ))

    errors = {"grad": [], "div": [], "curl": []}
    gaps = []
    hs = []
    for n in sizes:
        grid = Grid.cube(n)
        hs.append(grid.h)
        f = spec.field(grid)
        v = vec_spec.field(grid)
        exact_grad = np.stack([spec.derivative(grid, 0.0, ax) for ax in "xyz"], axis=-1)
        errors["grad"].append(_linf(diffops.grad(f).data - exact_grad))
        exact_div = sum(vec_spec.components[i].derivative(grid, 0.0, "xyz"[i]) for i in range(3))
        errors["div"].append(_linf(diffops.div(v).data - exact_div))
        s = vec_spec.sampled(grid, 0.0)
        errors["curl"].append(_linf(diffops.curl(v).data - s.curl()))
        # Divergence-theorem gap: exact divergence integrated over a part
        # against the boundary flux, on the same physical box at every n.
        p = Part(n // 8, 3 * n // 8, n // 8, n // 2, n // 4, 5 * n // 8)
        vg = gap_spec.field(grid)
        div_g = sum(gap_spec.components[i].derivative(grid, 0.0, "xyz"[i]) for i in range(3))
        gaps.append(abs(integrate_volume(ScalarField(grid, div_g), p) - _surface_flux(vg, p)))

    window = plan.tol("order_window")
    for op, errs in errors.items():
        for i in range(len(sizes) - 1):
            order = _order(errs[i], errs[i + 1], sizes[i], sizes[i + 1])
            rep.add(f"operators.{op}.order", f"{sizes[i]}->{sizes[i + 1]}", abs(order - 2.0), window)
            rep.notes[f"{op}_order_{sizes[i]}_{sizes[i + 1]}"] = order
    c_est = gaps[0] / hs[0] ** 2
    safety = plan.tol("richardson_safety")
    for n, h, gap in zip(sizes[1:], hs[1:], gaps[1:]):
        rep.add("operators.divergence_theorem.gap", f"n={n}", gap, safety * c_est * h**2)
    for i in range(len(sizes) - 1):
        order = _order(gaps[i], gaps[i + 1], sizes[i], sizes[i + 1])
        rep.add("operators.divergence_theorem.order", f"{sizes[i]}->{sizes[i + 1]}", abs(order - 2.0), window)
        rep.notes[f"divergence_gap_order_{sizes[i]}_{sizes[i + 1]}"] = order

    # Rigid-field identities on the finest grid.
    n = sizes[-1]
    grid = Grid.cube(n)
    inner = _interior(n)
    worst_curl = 0.0
    worst_sym = 0.0
    for o in power.sample_observers(plan.seed, grid, n_random=10):
        vr = power.rigid_velocity(o, grid, 0.0)
        curl = diffops.curl(vr).data[inner] - 2.0 * o.rotation_rate()
        gradv = diffops.grad(vr).data[inner]
        sym = 0.5 * (gradv + np.swapaxes(gradv, -1, -2))
        worst_curl = max(worst_curl, _linf(curl))
        worst_sym = max(worst_sym, _linf(sym))
    rep.add("operators.rigid.curl_is_twice_rotation", "interior", worst_curl, plan.tol("identity_abs"))
    rep.add("operators.rigid.sym_grad_vanishes", "interior", worst_sym, plan.tol("identity_abs"))

    # Exact pairing of midpoint volume and face-average surface quadrature.
    grid = Grid.cube(sizes[0])
    v = vec_spec.field(grid)
    p = Part(2, sizes[0] - 2, 2, sizes[0] - 3, 3, sizes[0] - 2)
    from . import diffops as d

    pairing = abs(integrate_volume(d.div(v), p) - _surface_flux(v, p))
    rep.add("operators.divergence_theorem.discrete_pairing", "exact", pairing, plan.tol("algebraic"))
    return rep


def _surface_flux(v, p):
    from .fields import integrate_surface

    return integrate_surface(v, p)


def _closed_states(plan: VerificationPlan, kappa: float, **kwargs):
    states = {}
    for n in plan.state_sizes:
        grid = Grid.cube(n)
        am = _mixture_for(plan, **kwargs)
        m = balances.close_state_via_balances(am, grid, t=0.25, kappa=kappa)
        if plan.perturb_growth is not None:
            from dataclasses import replace

            shift = np.asarray(plan.perturb_growth, dtype=np.float64)
            first = m.constituents[0]
            broken = replace(first, growth_momentum=VectorField(
                grid, first.growth_momentum.data + shift))
            m = MixtureState([broken] + m.constituents[1:], m.t, m.analytic)
        states[n] = (grid, m)
    return states


def _part_scale(m: MixtureState, p: Part) -> float:
    c = m.constituents[0]
    mags = (
        np.abs(c.rho.data[..., None] * c.body_force_total().data).max()
        + np.abs(c.stress.data).max()
        + np.abs(m.rho.data[..., None] * c.growth_momentum.data).max()
    )
    return p.volume(m.grid) * float(mags + 1.0)


def suite_theorem_forward(plan: VerificationPlan) -> SuiteReport:
    rep = SuiteReport("theorem_forward", plan.seed)
    kappa = plan.kappa
    rep.conventions = {
        "kappa": kappa,
        "moment_factor": kappa,
        "skew_closure": "skw T = -(kappa/2) rho cross(growth_moment)",
    }
    states = _closed_states(plan, kappa)
    sizes = plan.state_sizes
    safety = plan.tol("richardson_safety")

    gap_worst = {}
    shift_worst = 0.0
    for n, (grid, m) in states.items():
        parts = power.sample_parts(grid, plan.seed, n_scales=3, n_placements=5)
        observers = power.sample_observers(plan.seed, grid, n_random=10)
        worst = 0.0
        for p in parts:
            for alpha in range(m.n_constituents):
                f, c = power.invariance_gaps(m, alpha, p, pivot=observers[3].pivot,
                                             moment_factor=kappa)
                scale = _part_scale(m, p)
                worst = max(worst, max(_linf(f), _linf(c)) / scale)
        gap_worst[n] = worst
        if n == sizes[-1]:
            for p in parts[:5]:
                for o in observers:
                    for alpha in range(m.n_constituents):
                        f, c = power.invariance_gaps(m, alpha, p, pivot=o.pivot,
                                                     moment_factor=2.0)
                        dp = power.power_shift(m, alpha, p, o)
                        pred = float(np.dot(o.translation(), f) + np.dot(o.rotation_rate(), c))
                        before = power.constituent_power(m, alpha, p)
                        scale = abs(before) + abs(dp) + abs(pred) + 1.0
                        shift_worst = max(shift_worst, abs(dp - pred) / scale)

    h_coarse = Grid.cube(sizes[0]).h
    h_fine = Grid.cube(sizes[-1]).h
    c_est = gap_worst[sizes[0]] / h_coarse**2
    rep.add("power.invariance.gaps", f"n={sizes[-1]}", gap_worst[sizes[-1]],
            safety * c_est * h_fine**2)
    rep.add("power.invariance.shift_decomposition", "moment_factor=2", shift_worst,
            plan.tol("decomposition_rel"))
    rep.notes["gap_over_scale"] = {str(n): gap_worst[n] for n in sizes}

    grid_f, m_f = states[sizes[-1]]
    probe = power.sample_parts(grid_f, plan.seed, n_scales=3, n_placements=5)[0]
    f_probe, _ = power.invariance_gaps(m_f, 0, probe, pivot=grid_f.origin, moment_factor=kappa)
    rep.notes["probe_part"] = [probe.i0, probe.i1, probe.j0, probe.j1, probe.k0, probe.k1]
    rep.notes["probe_part_force_gap"] = [float(v) for v in f_probe]

    grid, m = states[sizes[-1]]
    parts = power.sample_parts(grid, plan.seed, n_scales=3, n_placements=5)
    observers = power.sample_observers(plan.seed, grid, n_random=10)
    center = observers[3].pivot
    scale = float(np.abs(m.rho.data).max() * sum(np.abs(c.growth_momentum.data).max() + 1.0
                                                 for c in m.constituents))
    worst_force = worst_couple = worst_raw = 0.0
    rng = np.random.default_rng(plan.seed + 1)
    for p in parts[:6]:
        f, c, raw = power.total_power_gap(m, p, pivot=center, moment_factor=kappa)
        worst_force = max(worst_force, _linf(f) / scale)
        worst_couple = max(worst_couple, _linf(c) / scale)
        for _ in range(3):
            o = power.ObserverChange(trans=tuple(rng.uniform(-1, 1, 3)),
                                     rot=tuple(rng.uniform(-1, 1, 3)), pivot=center)
            vr = power.rigid_velocity(o, grid, 0.0)
            worst_raw = max(worst_raw, abs(raw(vr)) / (scale * p.volume(grid)))
    rep.add("power.total.force_integral", "closed", worst_force, plan.tol("exact_small"))
    rep.add("power.total.couple_integral", "closed", worst_couple, plan.tol("exact_small"))
    rep.add("power.total.raw_rigid", "closed", worst_raw, plan.tol("exact_small"))

    msum, musum = balances.growth_sums(m)
    rep.add("growth.momentum_sum", "closed", _linf(msum.data), plan.tol("exact_small"))
    rep.add("growth.moment_sum", "closed", _linf(musum.data), plan.tol("exact_small"))

    # Kappa adjudication: which skew convention closes the moment balance
    # of the state whose power is rotation invariant.
    res_match = max(_linf(balances.constituent_moment_residual(m, a, kappa=kappa).data)
                    for a in range(m.n_constituents))
    other = 1.0 if kappa == 2.0 else 2.0
    res_other = max(_linf(balances.constituent_moment_residual(m, a, kappa=other).data)
                    for a in range(m.n_constituents))
    rep.add("convention.moment.closing_kappa", f"kappa={kappa}", res_match, plan.tol("exact_small"))
    rep.add("convention.moment.discrimination", f"kappa={kappa} vs {other}",
            res_match / max(res_other, 1e-300), plan.tol("discrimination_ratio"))
    rep.notes["moment_residual_rejected_kappa"] = res_other
    return rep


def suite_theorem_reverse(plan: VerificationPlan) -> SuiteReport:
    rep = SuiteReport("theorem_reverse", plan.seed)
    kappa = plan.kappa
    rep.conventions = {"kappa": kappa}
    states = _closed_states(plan, kappa)
    sizes = plan.state_sizes
    safety = plan.tol("richardson_safety")

    pointwise = {}
    for n, (grid, m) in states.items():
        inner = _interior(n)
        mom = max(_linf(balances.constituent_momentum_residual(m, a).data[inner])
                  for a in range(m.n_constituents))
        mix = _linf(balances.mixture_momentum_residual(m, "constituent-sum").data[inner])
        pointwise[n] = {"momentum": mom, "mixture": mix}
    h = {n: Grid.cube(n).h for n in sizes}
    for key in ("momentum", "mixture"):
        c_est = pointwise[sizes[0]][key] / h[sizes[0]] ** 2
        rep.add(f"{'momentum.constituent' if key == 'momentum' else 'momentum.mixture.constituent-sum'}",
                f"n={sizes[-1]}", pointwise[sizes[-1]][key], safety * c_est * h[sizes[-1]] ** 2)
        order = float(np.log2(pointwise[sizes[0]][key] / pointwise[sizes[-1]][key])
                      / np.log2(sizes[-1] / sizes[0]))
        rep.notes[f"order_{key}"] = order

    grid, m = states[sizes[-1]]
    inner = _interior(sizes[-1])
    res_moment = max(_linf(balances.constituent_moment_residual(m, a, kappa=kappa).data)
                     for a in range(m.n_constituents))
    rep.add("moment.constituent", f"kappa={kappa}", res_moment, plan.tol("exact_small"))
    rep.add("stress.symmetry.mixture", "closed", _linf(balances.mixture_moment_residual(m).data),
            plan.tol("exact_small"))

    # Mixture momentum variant adjudication against the constituent-sum
    # reference: exactly one literal variant is consistent.
    ref = {n: balances.mixture_momentum_residual(states[n][1], "constituent-sum").data
           for n in sizes}
    variants = {
        "concentration(+)": ("concentration", 1.0),
        "concentration(-)": ("concentration", -1.0),
        "density(+)": ("density", 1.0),
        "density(-)": ("density", -1.0),
    }
    mismatch = {}
    for name, (weighting, sign) in variants.items():
        per_size = {}
        for n in sizes:
            _, mm = states[n]
            r = balances.mixture_momentum_residual(mm, weighting, sign).data
            per_size[n] = _linf((r - ref[n])[_interior(n)])
        mismatch[name] = per_size
    c_est = mismatch["density(-)"][sizes[0]] / h[sizes[0]] ** 2
    tol_fine = safety * c_est * h[sizes[-1]] ** 2
    consistent = [name for name, per in mismatch.items() if per[sizes[-1]] <= tol_fine]
    rep.add("momentum.mixture.variant_consistency", "density(-)",
            mismatch["density(-)"][sizes[-1]], tol_fine)
    rep.add("momentum.mixture.unique_consistent_variant", ",".join(sorted(consistent)),
            abs(len(consistent) - 1), 0.5)
    rep.notes["variant_mismatch"] = {k: v[sizes[-1]] for k, v in mismatch.items()}

    # Localization: invariance gaps over a shrinking part family approach
    # the pointwise momentum residual scale.
    center = tuple(s // 2 for s in grid.shape)
    sizes_nodes = [8, 6, 4, 2]
    worst = 0.0
    res_point = balances.constituent_momentum_residual(m, 0).data
    c_loc = pointwise[sizes[0]]["momentum"] / h[sizes[0]] ** 2
    for p in power.shrinking_parts(center, sizes_nodes):
        f, _ = power.invariance_gaps(m, 0, p, pivot=grid.origin, moment_factor=kappa)
        density = np.abs(f) / p.volume(grid)
        local = _linf(res_point[p.slices])
        worst = max(worst, float(np.max(density)) - local)
    rep.add("power.invariance.localization", "shrinking-parts", max(worst, 0.0),
            safety * c_loc * h[sizes[-1]] ** 2)
    return rep


def _comoving_mixture(plan: VerificationPlan) -> AnalyticMixture:
    rng = np.random.default_rng(plan.seed + 7)
    rho_total = 2.0
    rho1 = AnalyticFieldSpec.constant(0.4 * rho_total) + balances._trig(rng, "xy", 0.2, 0.7)
    rho2 = AnalyticFieldSpec.constant(rho_total) + rho1.scaled(-1.0)
    flow = AnalyticVectorSpec((
        balances._trig(rng, "yz", 0.3, 0.7),
        balances._trig(rng, "xz", 0.3, 0.7),
        balances._trig(rng, "xy", 0.3, 0.7),
    ))
    from .mixture import AnalyticConstituent

    def cons(rho):
        return AnalyticConstituent(rho=rho, vel=flow, name="comoving")

    return AnalyticMixture([cons(rho1), cons(rho2)])


def suite_energetics(plan: VerificationPlan) -> SuiteReport:
    rep = SuiteReport("energetics", plan.seed)
    kappa = plan.kappa
    dt_fd = plan.tol("time_step_fd")
    safety = plan.tol("richardson_safety")
    rep.conventions = {
        "kappa": kappa,
        "transport_flux_sign": -1.0,
        "kinetic_rule_flux_sign": 1.0,
        "entropy_flux_contraction": "outward normal",
    }
    sizes = plan.state_sizes
    if any(n % 8 for n in sizes):
        raise ValueError("state sizes must be multiples of 8 (shared physical parts)")
    ams = {n: _mixture_for(plan) for n in sizes}
    grids = {n: Grid.cube(n) for n in sizes}

    def states_for(n):
        return lambda t: balances.close_state_via_balances(ams[n], grids[n], t, kappa=kappa)

    def probe_part(n):
        u = n // 8
        return Part(u, 4 * u, 2 * u, 7 * u, u, 5 * u)

    transport = {}
    kinetic = {}
    mix_ke = {}
    for n in sizes:
        states = states_for(n)
        p = probe_part(n)
        transport[n] = abs(energetics.kinetic_transport_residual(states, 0, p, 0.25, dt_fd, -1.0))
        kinetic[n] = abs(energetics.constituent_kinetic_energy_residual(states, 0, p, 0.25, dt_fd, 1.0))
        mix_ke[n] = abs(energetics.mixture_kinetic_energy_residual(
            states, p, 0.25, dt_fd, "transport-consistent").residual)
    h = {n: grids[n].h for n in sizes}
    for name, data in (("energy.kinetic.transport", transport),
                       ("energy.kinetic.constituent_rule", kinetic),
                       ("energy.kinetic.mixture", mix_ke)):
        c_est = data[sizes[0]] / h[sizes[0]] ** 2
        rep.add(name, f"n={sizes[-1]}", data[sizes[-1]],
                safety * c_est * h[sizes[-1]] ** 2 + 100.0 * dt_fd**2)

    n = sizes[-1]
    states = states_for(n)
    p = probe_part(n)
    # Discriminate the flux sign on the part where the wrong sign hurts most.
    candidates = [probe_part(n)] + power.sample_parts(grids[n], plan.seed, 2, 2)[:4]
    wrong_best = 0.0
    ratio = np.inf
    for cand in candidates:
        wrong = abs(energetics.kinetic_transport_residual(states, 0, cand, 0.25, dt_fd, +1.0))
        if wrong > wrong_best:
            wrong_best = wrong
            good = abs(energetics.kinetic_transport_residual(states, 0, cand, 0.25, dt_fd, -1.0))
            ratio = good / max(wrong, 1e-300)
    rep.add("convention.transport_flux_sign.discrimination", "-1 vs +1",
            ratio, plan.tol("discrimination_ratio"))

    m = states(0.25)
    rearranged = abs(energetics.inertial_power_integrand(m, 0, p))
    rep.add("energy.kinetic.rearranged_integrand", "closed b_in", rearranged,
            plan.tol("exact_small") * (1.0 + p.volume(m.grid)))

    # Co-moving degeneration: the printed mixture form closes on the whole
    # periodic domain, the transport-consistent one on interior parts.
    am_co = _comoving_mixture(plan)
    grid_co = grids[sizes[0]]
    states_co = lambda t: balances.close_state_via_balances(am_co, grid_co, t, kappa=kappa)
    whole = Part.whole(grid_co)
    printed = energetics.mixture_kinetic_energy_residual(states_co, whole, 0.25, dt_fd, "as-printed")
    rep.add("energy.kinetic.mixture.comoving_printed", "whole-domain",
            abs(printed.residual), 1e-6 + 100.0 * dt_fd**2)
    inner_part = probe_part(sizes[0])
    single_body = energetics.mixture_kinetic_energy_residual(
        states_co, inner_part, 0.25, dt_fd, "transport-consistent")
    c_mix = mix_ke[sizes[0]] / h[sizes[0]] ** 2
    rep.add("energy.kinetic.mixture.comoving_single_body", "interior-part",
            abs(single_body.residual), safety * c_mix * h[sizes[0]] ** 2 + 100.0 * dt_fd**2)
    rep.notes["mixture_ke_flux_term"] = single_body.flux_term
    rep.notes["mixture_ke_production_term"] = single_body.production_term

    # Energy balance forms.
    mth = energetics.close_energy_growth(m, "simple", "analytic")
    simple = {}
    for nn in sizes:
        mm = energetics.close_energy_growth(states_for(nn)(0.25), "simple", "analytic")
        simple[nn] = _linf(energetics.constituent_energy_residual(mm, 0, "simple", "discrete").data)
    c_est = simple[sizes[0]] / h[sizes[0]] ** 2
    rep.add("energy.balance.simple", f"n={sizes[-1]}", simple[sizes[-1]],
            safety * c_est * h[sizes[-1]] ** 2)
    diff = (
        energetics.constituent_energy_residual(mth, 0, "truesdell", "discrete").data
        - energetics.constituent_energy_residual(mth, 0, "simple", "discrete").data
        - energetics.energy_form_difference(mth, 0).data
    )
    scale = 1.0 + _linf(energetics.energy_form_difference(mth, 0).data)
    rep.add("energy.balance.form_difference", "truesdell-simple", _linf(diff),
            plan.tol("algebraic") * scale)

    # Simulator states construct pairwise-antisymmetric energy growths.
    sim_cfg = _default_scenario(grids[sizes[0]], plan.seed)
    record, _ = simulate.run(simulate.ScenarioConfig(
        grid=sim_cfg.grid, constituents=sim_cfg.constituents, drag=sim_cfg.drag,
        reaction_rate=sim_cfg.reaction_rate, cfl=sim_cfg.cfl,
        duration=10 * 0.01, dt=0.01, output_every=5))
    worst = max(_linf(energetics.energy_growth_sum(record.state(i)).data)
                for i in range(record.n_snapshots))
    rep.add("energy.growth_sum", "simulator", worst, plan.tol("growth_sum_sim"))

    # Entropy margin: zero fields, pure supply, constructed equality.
    margin_zero = energetics.entropy_margin(states_co, 0, inner_part, 0.25, dt_fd)
    rep.add("entropy.margin.zero_fields", "comoving-no-entropy", abs(margin_zero),
            plan.tol("exact_small") * 10.0)
    m_supply = _with_entropy_supply(m, 0.3)
    margin_supply = energetics.entropy_margin(lambda t: m_supply, 0, p, 0.25, dt_fd)
    expected = integrate_volume(ScalarField(m.grid, m.constituents[0].rho.data * 0.3), p)
    rep.add("entropy.margin.pure_supply", "constant-source",
            abs(margin_supply - expected), plan.tol("exact_small") * (1.0 + abs(expected)))
    margin_rev = _reversible_entropy_margin(ams[n], grids[n], kappa, p, 0.25, dt_fd)
    c_ent = abs(_reversible_entropy_margin(ams[sizes[0]], grids[sizes[0]], kappa,
                                           probe_part(sizes[0]), 0.25, dt_fd))
    rep.add("entropy.margin.reversible", f"n={n}", abs(margin_rev),
            safety * (c_ent / h[sizes[0]] ** 2) * h[n] ** 2 + 100.0 * dt_fd**2)
    return rep


def _with_entropy_supply(m: MixtureState, s0: float) -> MixtureState:
    from dataclasses import replace

    out = []
    for c in m.constituents:
        out.append(replace(
            c,
            entropy=ScalarField.zeros(m.grid),
            entropy_growth=ScalarField.zeros(m.grid),
            entropy_flux=VectorField.zeros(m.grid),
            entropy_source=ScalarField.full(m.grid, s0),
        ))
    return MixtureState(out, m.t, m.analytic)


def _reversible_entropy_margin(am: AnalyticMixture, grid: Grid, kappa: float,
                               p: Part, t: float, dt: float) -> float:
    """Entropy growth chosen so the inequality is an equality: the growth
    absorbs the fixed-part entropy content rate minus flux plus source."""
    from dataclasses import replace

    def states(tt: float) -> MixtureState:
        m = balances.close_state_via_balances(am, grid, tt, kappa=kappa)
        bundle = m.analytic
        out = []
        for alpha, c in enumerate(m.constituents):
            spec = am.constituents[alpha]
            if spec.entropy is None:
                out.append(c)
                continue
            eta = spec.entropy.sampled(grid, tt)
            rho = bundle.constituents[alpha].rho
            content_rate = (rho * eta).dt
            flux_div = spec.entropy_flux.sampled(grid, tt).div() if spec.entropy_flux is not None else 0.0
            source = c.entropy_source.data
            growth = (content_rate - flux_div + c.rho.data * source) / m.rho.data
            out.append(replace(c, entropy_growth=ScalarField(grid, growth)))
        return MixtureState(out, tt, m.analytic)

    return energetics.entropy_margin(states, 0, p, t, dt)


def suite_covariance(plan: VerificationPlan) -> SuiteReport:
    from . import diffops

    rep = SuiteReport("covariance", plan.seed)
    kappa = plan.kappa
    kappa_prime = kappa / 2.0
    rep.conventions = {"kappa": kappa, "kappa_prime": kappa_prime}
    sizes = plan.state_sizes
    safety = plan.tol("richardson_safety")
    ce = covariance.ConstitutiveEnergy(trace_coeff=0.4, quad_coeff=0.3)

    def build(n: int) -> tuple[Grid, MixtureState]:
        grid = Grid.cube(n)
        am = balances.trig_binary_mixture(seed=plan.seed, trig_metric=True)
        for spec in am.constituents:
            spec.stress = covariance.DoyleEricksenStress(ce, spec.rho, spec.metric)
        return grid, balances.close_state_via_balances(am, grid, 0.0, kappa=kappa)

    states = {n: build(n) for n in sizes}
    grid, m = states[sizes[-1]]

    # Metric derivative: analytic against central differences.
    rich = covariance.ConstitutiveEnergy(0.4, 0.3, 0.2, 0.1)
    g = m.constituents[0].metric.data
    rho = m.constituents[0].rho.data
    fd_err = _linf(covariance.finite_difference_energy_gradient(rich, rho, g)
                   - rich.d_energy_d_metric(rho, g))
    rep.add("covariance.metric_derivative.fd_agreement", "central-s=1e-5", fd_err,
            plan.tol("fd_metric"))

    de_res = max(_linf(covariance.doyle_ericksen_residual(m, a, ce).data)
                 for a in range(m.n_constituents))
    rep.add("covariance.doyle_ericksen", "consistent-stress", de_res, plan.tol("exact_small"))

    # Lie derivative identities.
    rng = np.random.default_rng(plan.seed + 3)
    o = power.sample_observers(plan.seed, grid, n_random=1)[-1]
    vr = power.rigid_velocity(o, grid, 0.0)
    inner = _interior(grid.nx)
    lie_rigid = _linf(covariance.lie_metric(vr).data[inner])
    rep.add("covariance.lie_metric.rigid", "identity-metric", lie_rigid, plan.tol("identity_abs"))
    wspec = balances._trig_vector(rng, 0.4)
    w = wspec.field(grid, 0.0)
    gradw = diffops.grad(w).data
    ref = gradw + np.swapaxes(gradw, -1, -2)
    rep.add("covariance.lie_metric.identity_reduction", "2 sym grad",
            _linf(covariance.lie_metric(w).data - ref), 1e-14)

    # Term magnitudes on the consistent closed state do a Richardson pass.
    terms_by_size = {}
    for n, (gr, mm) in states.items():
        p = Part(2, n - 3, 2, n - 3, 3, n - 2)
        worst = {"de": 0.0, "momentum": 0.0, "moment": 0.0}
        rng_n = np.random.default_rng(plan.seed + 11)
        for _ in range(5):
            ws = balances._trig_vector(rng_n, 0.4)
            wf = ws.field(gr, 0.0)
            wnorm = _linf(wf.data) + 1.0
            d = covariance.SpatialDeformation(wf, target=0)
            terms = covariance.covariance_residual(mm, 0, d, ce, p, kappa_prime=kappa_prime)
            worst["de"] = max(worst["de"], abs(terms.de_term) / wnorm)
            worst["momentum"] = max(worst["momentum"], abs(terms.momentum_term) / wnorm)
            worst["moment"] = max(worst["moment"], abs(terms.moment_term) / wnorm)
        terms_by_size[n] = worst
    h = {n: states[n][0].h for n in sizes}
    c_est = max(terms_by_size[sizes[0]]["momentum"], 1e-14) / h[sizes[0]] ** 2
    rep.add("covariance.momentum_term", f"n={sizes[-1]}", terms_by_size[sizes[-1]]["momentum"],
            safety * c_est * h[sizes[-1]] ** 2)
    rep.add("covariance.de_term", "consistent-stress", terms_by_size[sizes[-1]]["de"],
            plan.tol("exact_small"))
    rep.add("covariance.moment_term", f"kappa_prime={kappa_prime}",
            terms_by_size[sizes[-1]]["moment"], plan.tol("exact_small"))
    other = 1.0 if kappa_prime == 0.5 else 0.5
    p = Part(2, grid.nx - 3, 2, grid.nx - 3, 3, grid.nx - 2)
    ws = balances._trig_vector(np.random.default_rng(plan.seed + 13), 0.4)
    wf = ws.field(grid, 0.0)
    d = covariance.SpatialDeformation(wf, target=0)
    rejected = abs(covariance.covariance_residual(m, 0, d, ce, p, kappa_prime=other).moment_term)
    accepted = abs(covariance.covariance_residual(m, 0, d, ce, p, kappa_prime=kappa_prime).moment_term)
    rep.add("convention.covariance.kappa_prime_discrimination",
            f"{kappa_prime} vs {other}", accepted / max(rejected, 1e-300),
            plan.tol("discrimination_ratio"))

    # Rigid generators reproduce the rotational invariance gaps.
    worst_rel = 0.0
    for o in power.sample_observers(plan.seed + 5, grid, n_random=3)[3:]:
        vr = power.rigid_velocity(o, grid, 0.0)
        d = covariance.SpatialDeformation(vr, target=0)
        terms = covariance.covariance_residual(m, 0, d, ce, p, kappa_prime=kappa_prime)
        f, c = power.invariance_gaps(m, 0, p, pivot=o.pivot, moment_factor=2.0 * kappa_prime,
                                     form="volume")
        pred = -(float(np.dot(o.translation(), f)) + float(np.dot(o.rotation_rate(), c)))
        combo = terms.momentum_term + terms.moment_term
        worst_rel = max(worst_rel, abs(combo - pred) / (abs(pred) + abs(combo) + 1e-30))
        worst_rel = max(worst_rel, abs(terms.de_term))
    rep.add("covariance.rigid_generator.matches_power_gaps", "volume-form", worst_rel,
            plan.tol("cross_module_rel"))
    return rep


def _default_scenario(grid: Grid, seed: int) -> simulate.ScenarioConfig:
    rng = np.random.default_rng(seed)
    rho1 = AnalyticFieldSpec.constant(1.0) + balances._trig(rng, "xy", 0.2)
    rho2 = AnalyticFieldSpec.constant(1.5) + balances._trig(rng, "yz", 0.2)
    vel1 = AnalyticVectorSpec((balances._trig(rng, "x", 0.2), balances._trig(rng, "y", 0.2),
                               AnalyticFieldSpec()))
    vel2 = AnalyticVectorSpec((AnalyticFieldSpec(), balances._trig(rng, "z", 0.2),
                               balances._trig(rng, "xz", 0.2)))
    return simulate.ScenarioConfig(
        grid=grid,
        constituents=(
            simulate.ConstituentScenario("first", rho1, vel1, 0.5, 1.4),
            simulate.ConstituentScenario("second", rho2, vel2, 0.7, 1.3),
        ),
        drag=0.5,
        reaction_rate=0.3,
        cfl=0.4,
        duration=1.0,
    )


def suite_simulate(plan: VerificationPlan) -> SuiteReport:
    rep = SuiteReport("simulate", plan.seed)
    grid = Grid.cube(16)
    if plan.scenario and plan.scenario.endswith(".json"):
        try:
            cfg = simulate.ScenarioConfig.from_json(plan.scenario)
            grid = cfg.grid
        except (KeyError, ValueError):
            cfg = _default_scenario(grid, plan.seed)
    else:
        cfg = _default_scenario(grid, plan.seed)

    dt = 0.01
    base = simulate.ScenarioConfig(
        grid=cfg.grid, constituents=cfg.constituents, drag=cfg.drag,
        reaction_rate=cfg.reaction_rate, cfl=0.5, duration=1000 * dt, dt=dt,
        output_every=250,
    )
    _, rep_full = simulate.run(base)
    rep.add("simulate.mass_conservation", "1000-steps", rep_full["mass_drift_mixture"],
            plan.tol("sim_mass_rel"))
    rep.add("simulate.momentum_conservation", "1000-steps", rep_full["momentum_drift_relative"],
            plan.tol("sim_momentum_rel"))
    rep.add("simulate.mass_exchange_pairing", "1000-steps", rep_full["exchange_sum_max"],
            plan.tol("growth_sum_sim"))

    no_reaction = simulate.ScenarioConfig(
        grid=cfg.grid, constituents=cfg.constituents, drag=cfg.drag, reaction_rate=0.0,
        cfl=0.5, duration=200 * dt, dt=dt, output_every=100,
    )
    _, rep_nr = simulate.run(no_reaction)
    rep.add("simulate.constituent_mass_conservation", "no-reaction",
            max(rep_nr["mass_drift_constituents"]), plan.tol("sim_mass_rel"))

    # Drag relaxation against the two-body oracle over five e-foldings.
    drag = 2.0
    t_end = 5.0 / drag
    rho1, rho2 = 1.0, 2.0
    v1_0, v2_0 = (0.3, 0.0, 0.0), (-0.2, 0.1, 0.0)
    relax = simulate.ScenarioConfig(
        grid=grid,
        constituents=(
            simulate.ConstituentScenario("first", AnalyticFieldSpec.constant(rho1),
                                         AnalyticVectorSpec.constant(v1_0), 0.5, 1.4),
            simulate.ConstituentScenario("second", AnalyticFieldSpec.constant(rho2),
                                         AnalyticVectorSpec.constant(v2_0), 0.8, 1.2),
        ),
        drag=drag, cfl=0.5, duration=t_end, dt=t_end / 500, output_every=500,
    )

    def relaxation_error(config: simulate.ScenarioConfig) -> float:
        record, _ = simulate.run(config)
        steps = int(round(config.duration / config.dt))
        v1, v2 = simulate.uniform_drag_oracle(rho1, rho2, v1_0, v2_0, drag, config.duration,
                                              steps * 100)
        final = record.state(record.n_snapshots - 1)
        dv_sim = final.constituents[0].vel.data[0, 0, 0] - final.constituents[1].vel.data[0, 0, 0]
        dv_ref = v1 - v2
        return float(np.max(np.abs(dv_sim - dv_ref)) / np.max(np.abs(dv_ref)))

    err_full = relaxation_error(relax)
    rep.add("simulate.drag_relaxation", "5-efoldings", err_full, plan.tol("sim_ode_rel"))
    half = simulate.ScenarioConfig(
        grid=grid, constituents=relax.constituents, drag=drag, cfl=0.5,
        duration=t_end, dt=relax.dt / 2, output_every=1000,
    )
    err_half = relaxation_error(half)
    rep.add("simulate.step_halving_gain", "dt/2",
            plan.tol("sim_halving_factor") * err_half, err_full)
    rep.notes["relaxation_error_full"] = err_full
    rep.notes["relaxation_error_half"] = err_half

    # Stored snapshots satisfy the pointwise balances.
    short = simulate.ScenarioConfig(
        grid=cfg.grid, constituents=cfg.constituents, drag=cfg.drag,
        reaction_rate=cfg.reaction_rate, cfl=0.5, duration=20 * dt, dt=dt, output_every=1,
    )
    record, _ = simulate.run(short)
    mid = record.n_snapshots // 2
    m = record.state_with_time_data(mid)
    mass_res = max(_linf(balances.constituent_mass_residual(m, a).data) for a in range(2))
    mom_res = max(_linf(balances.constituent_momentum_residual(m, a).data) for a in range(2))
    h2 = grid.h**2
    scale = float(max(np.abs(m.constituents[a].stress.data).max() for a in range(2)) + 1.0)
    tol = 5.0 * scale * (h2 + dt**2)
    rep.add("simulate.snapshot_mass_balance", f"dt={dt}", mass_res, tol)
    rep.add("simulate.snapshot_momentum_balance", f"dt={dt}", mom_res, tol)
    msum, musum = balances.growth_sums(m)
    rep.add("simulate.growth_self_equilibration", "snapshot",
            max(_linf(msum.data), _linf(musum.data)), plan.tol("growth_sum_sim"))
    return rep


SUITES = {
    "operators": suite_operators,
    "theorem-forward": suite_theorem_forward,
    "theorem-reverse": suite_theorem_reverse,
    "energetics": suite_energetics,
    "covariance": suite_covariance,
    "simulate": suite_simulate,
}


def run_suite(name: str, plan: VerificationPlan) -> SuiteReport:
    return SUITES[name](plan)


def run_plan(plan: VerificationPlan) -> tuple[list[SuiteReport], bool]:
    reports = [run_suite(name, plan) for name in plan.suites]
    return reports, all(r.passed for r in reports)
