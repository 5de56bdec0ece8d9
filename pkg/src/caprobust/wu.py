"""Scenario-based capacity expansion LP.

One builder, :func:`build_dispatch`, assembles the investment-plus-dispatch
model for a set of weighted weather scenarios.  Three variants share it:

* the stochastic plan (free or fleet-size-constrained nuclear),
* the robust master problem, which adds forced unplanned nuclear outages per
  scenario and step,
* the simulation problem, which fixes all capacities and adds a priced
  loss-of-load slack.

Energy quantities inside the model are MWh per step; capacities are MW
(battery energy MWh); money is currency per year.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .case import GEN_TECHS, TECHS, SteppedCase, SteppedSeries, capital_recovery_factor, transmission_efficiency
from .errors import InvalidParameterError, ModelBuildError, SolverError
from .lp import Model, SolveOptions, diagnose_infeasibility, solve

log = logging.getLogger(__name__)

T_IDX = {p: k for k, p in enumerate(TECHS)}
G_IDX = {p: k for k, p in enumerate(GEN_TECHS)}


@dataclass(frozen=True, eq=False)
class CapacityMix:
    """Installed capacities: ``capacity`` (regions, TECHS) and ``trans`` (links,)."""

    capacity: np.ndarray
    trans: np.ndarray

    def __post_init__(self):
        cap = np.array(self.capacity, dtype=float)
        tr = np.array(self.trans, dtype=float)
        cap.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "capacity", cap)
        object.__setattr__(self, "trans", tr)

    def total(self, tech: str) -> float:
        return float(self.capacity[:, T_IDX[tech]].sum())

    def cleaned(self, max_capacity: np.ndarray | None = None, dt: float | None = None) -> "CapacityMix":
        """Snap solver noise: clip to [0, max], drop values below 1e-6 MW, keep dt*I <= B."""
        cap = np.where(np.abs(self.capacity) < 1e-6, 0.0, np.maximum(self.capacity, 0.0))
        if max_capacity is not None:
            cap = np.minimum(cap, max_capacity)
        if dt is not None:
            b, i = T_IDX["B"], T_IDX["I"]
            cap[:, b] = np.maximum(cap[:, b], dt * cap[:, i])
        tr = np.where(np.abs(self.trans) < 1e-6, 0.0, np.maximum(self.trans, 0.0))
        return CapacityMix(cap, tr)


@dataclass(frozen=True, eq=False)
class Dispatch:
    """Operational decisions, MWh per step, first axis = scenario.

    ``gen`` is (S, R, GEN_TECHS, T); ``flow`` is (S, L, 2, T) with direction 0
    from the link's first to its second region.
    """

    gen: np.ndarray
    charge: np.ndarray
    flow: np.ndarray
    reservoir: np.ndarray
    battery: np.ndarray
    shed: np.ndarray
    planned: np.ndarray
    unplanned: np.ndarray
    lol: np.ndarray


@dataclass(frozen=True)
class CostBreakdown:
    ic: float
    fc: float
    oc: float  # expected operational cost
    emissions_cost: float  # expected carbon tax payments
    shed_cost: float  # expected load-shedding cost
    lol_cost: float = 0.0  # expected loss-of-load penalty (simulation only)

    @property
    def total(self) -> float:
        return self.ic + self.fc + self.oc + self.emissions_cost + self.shed_cost + self.lol_cost


@dataclass(frozen=True)
class ScenarioOutcome:
    id: str
    probability: float
    oc: float
    emissions: float  # tCO2
    shed: float  # MWh
    lol: float  # MWh


@dataclass(frozen=True, eq=False)
class PlanSolution:
    mix: CapacityMix
    sc: float
    breakdown: CostBreakdown
    scenarios: tuple[ScenarioOutcome, ...]
    dispatch: Dispatch
    region_ids: tuple[str, ...]
    link_ids: tuple[str, ...]
    unit_nuclear: float
    max_violation: float = 0.0

    @property
    def capacity(self) -> np.ndarray:
        return self.mix.capacity

    @property
    def trans_capacity(self) -> np.ndarray:
        return self.mix.trans

    @property
    def n_equivalent(self) -> float:
        return self.mix.total("N") / self.unit_nuclear

    def to_dict(self) -> dict:
        return {
            "capacity": {
                rid: {p: float(self.capacity[r, k]) for k, p in enumerate(TECHS)} for r, rid in enumerate(self.region_ids)
            },
            "trans_capacity": {lid: float(v) for lid, v in zip(self.link_ids, self.trans_capacity)},
            "n_equivalent": self.n_equivalent,
            "sc": self.sc,
            "breakdown": {
                "ic": self.breakdown.ic,
                "fc": self.breakdown.fc,
                "oc": self.breakdown.oc,
                "emissions_cost": self.breakdown.emissions_cost,
                "shed_cost": self.breakdown.shed_cost,
                "lol_cost": self.breakdown.lol_cost,
            },
            "scenarios": [
                {"id": s.id, "probability": s.probability, "oc": s.oc, "emissions": s.emissions, "shed": s.shed, "lol": s.lol}
                for s in self.scenarios
            ],
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def dispatch_csv(self, path) -> None:
        """Long table: scenario, step, region (or link), quantity, MWh."""
        d = self.dispatch
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["scenario", "step", "region", "quantity", "value"])
            for s, sc in enumerate(self.scenarios):
                for r, rid in enumerate(self.region_ids):
                    series = {f"gen_{p}": d.gen[s, r, k] for k, p in enumerate(GEN_TECHS)}
                    series.update(
                        charge=d.charge[s, r],
                        shed=d.shed[s, r],
                        planned=d.planned[s, r],
                        unplanned=d.unplanned[s, r],
                        lol=d.lol[s, r],
                        reservoir=d.reservoir[s, r],
                        battery=d.battery[s, r],
                    )
                    for name, vals in series.items():
                        for t, v in enumerate(vals):
                            w.writerow([sc.id, t, rid, name, repr(float(v))])
                for li, lid in enumerate(self.link_ids):
                    for direction in (0, 1):
                        tag = "flow_fwd" if direction == 0 else "flow_rev"
                        for t, v in enumerate(d.flow[s, li, direction]):
                            w.writerow([sc.id, t, lid, tag, repr(float(v))])


def mix_from_dict(data: dict, region_ids: Sequence[str], link_ids: Sequence[str]) -> CapacityMix:
    """Inverse of the ``capacity``/``trans_capacity`` part of :meth:`PlanSolution.to_dict`."""
    try:
        cap = np.array([[float(data["capacity"][rid].get(p, 0.0)) for p in TECHS] for rid in region_ids])
        tr = np.array([float(data.get("trans_capacity", {}).get(lid, 0.0)) for lid in link_ids])
    except KeyError as exc:
        raise InvalidParameterError(f"plan lacks capacities for {exc}") from None
    return CapacityMix(cap, tr)


def link_ids(stepped: SteppedCase) -> tuple[str, ...]:
    return tuple(f"{ln.a}-{ln.b}" for ln in stepped.case.links)


# --------------------------------------------------------------------------
# model assembly


@dataclass
class VarIndex:
    cap: np.ndarray
    trans: np.ndarray
    gen: np.ndarray
    charge: np.ndarray
    flow: np.ndarray
    reservoir: np.ndarray
    battery: np.ndarray
    shed: np.ndarray
    planned: np.ndarray
    unplanned: np.ndarray | None
    lol: np.ndarray | None


def _check_series(stepped: SteppedCase, scenarios: Sequence[SteppedSeries]):
    shape = (len(stepped.case.regions), stepped.n_steps)
    for s in scenarios:
        for name in ("load", "cf_wind", "cf_solar", "inflow"):
            arr = getattr(s, name)
            if arr.shape != shape:
                raise ModelBuildError(f"series {s.id}.{name} has shape {arr.shape}, expected {shape}")


def annualized_costs(stepped: SteppedCase) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-MW yearly investment (TECHS), fixed (TECHS) and per-MW transmission investment (links)."""
    case, sc = stepped.case, stepped.scalars
    inv = np.array([case.technologies[p].inv_cost * capital_recovery_factor(sc.discount_rate, case.technologies[p].lifetime) for p in TECHS])
    fix = np.array([case.technologies[p].fixed_cost for p in TECHS])
    crf_t = capital_recovery_factor(sc.discount_rate, sc.trans_lifetime)
    trans = np.array([sc.c_trans * crf_t * ln.distance for ln in case.links])
    return inv, fix, trans


def _op_cost_rates(stepped: SteppedCase) -> tuple[np.ndarray, np.ndarray]:
    tech = stepped.case.technologies
    marginal = np.array([tech[p].marginal_cost for p in GEN_TECHS])
    emis = np.array([tech[p].emission_rate for p in GEN_TECHS])
    return marginal, emis


def build_dispatch(
    stepped: SteppedCase,
    scenarios: Sequence[SteppedSeries],
    *,
    fixed_n: int | None = None,
    unplanned_mw: np.ndarray | None = None,
    fixed_mix: CapacityMix | None = None,
    loss_of_load: bool = False,
    name: str = "wu",
) -> tuple[Model, VarIndex]:
    """Assemble the capacity expansion / dispatch LP.

    ``unplanned_mw`` (scenarios, steps) is the nuclear capacity forced offline
    at each step; its presence adds the unplanned-outage variables.
    ``fixed_mix`` pins every capacity, turning the model into pure dispatch.
    """
    case, sc = stepped.case, stepped.scalars
    ts, T = stepped.ts, stepped.n_steps
    R, L, S = len(case.regions), len(case.links), len(scenarios)
    if S == 0:
        raise ModelBuildError("at least one scenario is required")
    _check_series(stepped, scenarios)
    probs = np.array([s.probability for s in scenarios])
    if abs(probs.sum() - 1.0) > 1e-9:
        raise InvalidParameterError(f"scenario probabilities sum to {probs.sum():.12g}, not 1")
    capmax = case.max_capacity()
    m_unit = sc.unit_nuclear
    if fixed_n is not None:
        if fixed_n < 0:
            raise InvalidParameterError("fixed_n must be >= 0")
        if m_unit * fixed_n > capmax[:, T_IDX["N"]].sum() + 1e-9:
            raise InvalidParameterError(f"{fixed_n} nuclear units exceed the regional nuclear potential")
    if unplanned_mw is not None:
        unplanned_mw = np.asarray(unplanned_mw, dtype=float)
        if unplanned_mw.shape != (S, T):
            raise ModelBuildError(f"unplanned outage array has shape {unplanned_mw.shape}, expected {(S, T)}")

    load = np.stack([s.load for s in scenarios])  # (S, R, T)
    cfw = np.stack([s.cf_wind for s in scenarios])
    cfp = np.stack([s.cf_solar for s in scenarios])
    inflow = np.stack([s.inflow for s in scenarios])
    pairs = case.link_pairs()
    eta = np.array([transmission_efficiency(ln.distance, sc.loss_per_1000km) for ln in case.links])
    eta_i = case.technologies["I"].efficiency

    m = Model(name=name)
    if fixed_mix is not None:
        cap = m.add_vars("cap", (R, len(TECHS)), lb=fixed_mix.capacity, ub=fixed_mix.capacity)
        trans = m.add_vars("capT", (L,), lb=fixed_mix.trans, ub=fixed_mix.trans)
    else:
        cap = m.add_vars("cap", (R, len(TECHS)), lb=0.0, ub=capmax)
        trans = m.add_vars("capT", (L,), lb=0.0, ub=np.inf)
    gen = m.add_vars("g", (S, R, len(GEN_TECHS), T))
    charge = m.add_vars("gB", (S, R, T))
    flow = m.add_vars("F", (S, L, 2, T))
    rmax = np.array([r.hydro_reservoir_cap for r in case.regions])
    reservoir = m.add_vars("RL", (S, R, T), ub=rmax[None, :, None])
    battery = m.add_vars("BL", (S, R, T))
    shed = m.add_vars("LS", (S, R, T), ub=sc.sr * ts * load)
    planned = m.add_vars("OP", (S, R, T))
    unplanned = m.add_vars("OU", (S, R, T)) if unplanned_mw is not None else None
    lol = m.add_vars("LL", (S, R, T)) if loss_of_load else None

    # objective
    inv, fix, trans_cost = annualized_costs(stepped)
    m.add_objective((inv + fix)[None, :], cap)
    m.add_objective(trans_cost, trans)
    marginal, emis = _op_cost_rates(stepped)
    rate = marginal + sc.c_tax * emis  # per GEN_TECHS
    w = probs[:, None, None, None] * rate[None, None, :, None]
    m.add_objective(np.broadcast_to(w, gen.shape), gen)
    m.add_objective(np.broadcast_to(probs[:, None, None] * sc.c_shed, shed.shape), shed)
    if lol is not None:
        m.add_objective(np.broadcast_to(probs[:, None, None] * sc.big_m_lol, lol.shape), lol)

    # energy balance
    terms = [(1.0, gen[:, :, k, :]) for k in range(len(GEN_TECHS))]
    terms += [(-1.0, charge), (1.0, shed)]
    if lol is not None:
        terms.append((1.0, lol))
    for li, (a, b) in enumerate(pairs):
        out_a = np.zeros(R)
        out_a[a], out_a[b] = -1.0, eta[li]
        terms.append((out_a[None, :, None], flow[:, li, 0, :][:, None, :]))
        out_b = np.zeros(R)
        out_b[b], out_b[a] = -1.0, eta[li]
        terms.append((out_b[None, :, None], flow[:, li, 1, :][:, None, :]))
    m.add_constrs("balance", terms, ">=", ts * load)

    # nuclear planned maintenance takes a fixed share of the year
    m.add_constrs(
        "planned_total",
        [(1.0, planned, "sum"), (-sc.beta * T * ts, cap[None, :, T_IDX["N"]])],
        "==",
        np.zeros((S, R)),
    )
    prev = lambda ids: np.roll(ids, 1, axis=-1)  # noqa: E731  step t-1, cyclic
    m.add_constrs(
        "reservoir_balance",
        [(1.0, reservoir), (-1.0, prev(reservoir)), (1.0, gen[:, :, G_IDX["H"], :])],
        "<=",
        ts * inflow,
    )
    m.add_constrs(
        "battery_balance",
        [(1.0, battery), (-1.0, prev(battery)), (-eta_i, charge), (1.0 / eta_i, gen[:, :, G_IDX["I"], :])],
        "<=",
        np.zeros((S, R, T)),
    )
    nuc = [(1.0, gen[:, :, G_IDX["N"], :]), (1.0, planned), (-ts, cap[None, :, T_IDX["N"], None])]
    if unplanned is not None:
        nuc.append((1.0, unplanned))
    m.add_constrs("nuclear_avail", nuc, "<=", np.zeros((S, R, T)))
    m.add_constrs("wind_cap", [(1.0, gen[:, :, G_IDX["W"], :]), (-ts * cfw, cap[None, :, T_IDX["W"], None])], "<=", np.zeros((S, R, T)))
    m.add_constrs("solar_cap", [(1.0, gen[:, :, G_IDX["P"], :]), (-ts * cfp, cap[None, :, T_IDX["P"], None])], "<=", np.zeros((S, R, T)))
    for p in ("G", "H"):
        m.add_constrs(
            f"{p.lower()}_cap", [(1.0, gen[:, :, G_IDX[p], :]), (-ts, cap[None, :, T_IDX[p], None])], "<=", np.zeros((S, R, T))
        )
    m.add_constrs(
        "inverter_cap",
        [(1.0, gen[:, :, G_IDX["I"], :]), (1.0, charge), (-ts, cap[None, :, T_IDX["I"], None])],
        "<=",
        np.zeros((S, R, T)),
    )
    if fixed_mix is None:
        m.add_constrs("battery_sizing", [(sc.dt, cap[:, T_IDX["I"]]), (-1.0, cap[:, T_IDX["B"]])], "<=", np.zeros(R))
    if L:
        m.add_constrs(
            "trans_cap", [(1.0, flow[:, :, 0, :]), (1.0, flow[:, :, 1, :]), (-ts, trans[None, :, None])], "<=", np.zeros((S, L, T))
        )
    m.add_constrs("battery_level_cap", [(1.0, battery), (-1.0, cap[None, :, T_IDX["B"], None])], "<=", np.zeros((S, R, T)))
    if fixed_n is not None and fixed_mix is None:
        m.add_constr("fleet_size", {int(i): 1.0 for i in cap[:, T_IDX["N"]]}, "==", m_unit * fixed_n)
    if unplanned is not None:
        m.add_constrs("unplanned_total", [(1.0, np.moveaxis(unplanned, 1, 2), "sum")], "==", ts * unplanned_mw)

    idx = VarIndex(cap, trans, gen, charge, flow, reservoir, battery, shed, planned, unplanned, lol)
    return m, idx


def build_wu(stepped: SteppedCase, scenarios: Sequence[SteppedSeries] | None = None, fixed_n: int | None = None) -> Model:
    scenarios = list(stepped.series if scenarios is None else scenarios)
    return build_dispatch(stepped, scenarios, fixed_n=fixed_n)[0]


# --------------------------------------------------------------------------
# solution extraction


def _extract(stepped, scenarios, idx: VarIndex, x: np.ndarray, sc_value: float, violation: float) -> PlanSolution:
    case, scal = stepped.case, stepped.scalars
    S, R, T = len(scenarios), len(case.regions), stepped.n_steps
    cap = x[idx.cap]
    trans = x[idx.trans]
    zeros = np.zeros((S, R, T))
    d = Dispatch(
        gen=x[idx.gen],
        charge=x[idx.charge],
        flow=x[idx.flow],
        reservoir=x[idx.reservoir],
        battery=x[idx.battery],
        shed=x[idx.shed],
        planned=x[idx.planned],
        unplanned=x[idx.unplanned] if idx.unplanned is not None else zeros,
        lol=x[idx.lol] if idx.lol is not None else zeros,
    )
    for arr in vars(d).values():
        arr.setflags(write=False)
    inv, fix, trans_cost = annualized_costs(stepped)
    ic = float((inv[None, :] * cap).sum() + (trans_cost * trans).sum())
    fc = float((fix[None, :] * cap).sum())
    marginal, emis = _op_cost_rates(stepped)
    outcomes = []
    for s, ser in enumerate(scenarios):
        g = d.gen[s]  # (R, P, T)
        oc = float((marginal[None, :, None] * g).sum())
        e = float((emis[None, :, None] * g).sum())
        outcomes.append(ScenarioOutcome(ser.id, ser.probability, oc, e, float(d.shed[s].sum()), float(d.lol[s].sum())))
    probs = np.array([o.probability for o in outcomes])
    bd = CostBreakdown(
        ic=ic,
        fc=fc,
        oc=float(sum(p * o.oc for p, o in zip(probs, outcomes))),
        emissions_cost=float(sum(p * scal.c_tax * o.emissions for p, o in zip(probs, outcomes))),
        shed_cost=float(sum(p * scal.c_shed * o.shed for p, o in zip(probs, outcomes))),
        lol_cost=float(sum(p * scal.big_m_lol * o.lol for p, o in zip(probs, outcomes))),
    )
    return PlanSolution(
        mix=CapacityMix(cap, trans),
        sc=sc_value,
        breakdown=bd,
        scenarios=tuple(outcomes),
        dispatch=d,
        region_ids=tuple(case.region_ids),
        link_ids=link_ids(stepped),
        unit_nuclear=scal.unit_nuclear,
        max_violation=violation,
    )


def solve_dispatch(
    stepped: SteppedCase,
    scenarios: Sequence[SteppedSeries],
    options: SolveOptions | None = None,
    diagnose: bool = True,
    **build_kw,
) -> PlanSolution:
    """Build, solve and unpack; non-optimal outcomes raise :class:`SolverError`."""
    model, idx = build_dispatch(stepped, scenarios, **build_kw)
    res = solve(model, options)
    if not res.optimal:
        diag = diagnose_infeasibility(model, options) if (diagnose and res.status == "infeasible") else {}
        raise SolverError(f"{model.name}: solver returned {res.status} ({res.message})", res.status, diag)
    return _extract(stepped, scenarios, idx, res.x, res.objective, res.max_violation or 0.0)


def solve_wu(
    stepped: SteppedCase,
    scenarios: Sequence[SteppedSeries] | None = None,
    fixed_n: int | None = None,
    options: SolveOptions | None = None,
) -> PlanSolution:
    """Least-cost plan over the weighted weather scenarios (all series by default)."""
    scenarios = list(stepped.series if scenarios is None else scenarios)
    return solve_dispatch(stepped, scenarios, options, fixed_n=fixed_n, name="wu")


# --------------------------------------------------------------------------
# residual audit


def audit_dispatch(
    stepped: SteppedCase,
    scenarios: Sequence[SteppedSeries],
    mix: CapacityMix,
    d: Dispatch,
) -> dict[str, float]:
    """Worst violation of each operational constraint family, in MW (MWh per step / ts).

    Zero means satisfied.  ``planned_total`` compares scheduled maintenance
    with beta * |T| * ts * nuclear capacity.
    """
    case, sc = stepped.case, stepped.scalars
    ts, T = stepped.ts, stepped.n_steps
    load = np.stack([s.load for s in scenarios])
    inflow = np.stack([s.inflow for s in scenarios])
    cfw = np.stack([s.cf_wind for s in scenarios])
    cfp = np.stack([s.cf_solar for s in scenarios])
    eta = np.array([transmission_efficiency(ln.distance, sc.loss_per_1000km) for ln in case.links])
    eta_i = case.technologies["I"].efficiency
    cap = mix.capacity

    supply = d.gen.sum(axis=2) - d.charge + d.shed + d.lol
    for li, (a, b) in enumerate(case.link_pairs()):
        supply[:, a] += eta[li] * d.flow[:, li, 1] - d.flow[:, li, 0]
        supply[:, b] += eta[li] * d.flow[:, li, 0] - d.flow[:, li, 1]
    out = {}
    out["balance"] = float(np.maximum(ts * load - supply, 0).max()) / ts
    out["shed_cap"] = float(np.maximum(d.shed - sc.sr * ts * load, 0).max()) / ts
    res_prev = np.roll(d.reservoir, 1, axis=-1)
    out["reservoir_cyclic"] = float(np.maximum(d.reservoir - res_prev - ts * inflow + d.gen[:, :, G_IDX["H"]], 0).max()) / ts
    bat_prev = np.roll(d.battery, 1, axis=-1)
    out["battery_cyclic"] = (
        float(np.maximum(d.battery - bat_prev - eta_i * d.charge + d.gen[:, :, G_IDX["I"]] / eta_i, 0).max()) / ts
    )
    target = sc.beta * T * ts * cap[:, T_IDX["N"]]
    out["planned_total"] = float(np.abs(d.planned.sum(axis=-1) - target[None, :]).max()) / ts
    avail = ts * cap[None, :, T_IDX["N"], None] - d.planned - d.unplanned
    out["nuclear_avail"] = float(np.maximum(d.gen[:, :, G_IDX["N"]] - avail, 0).max()) / ts
    out["wind_cap"] = float(np.maximum(d.gen[:, :, G_IDX["W"]] - ts * cfw * cap[None, :, T_IDX["W"], None], 0).max()) / ts
    out["solar_cap"] = float(np.maximum(d.gen[:, :, G_IDX["P"]] - ts * cfp * cap[None, :, T_IDX["P"], None], 0).max()) / ts
    out["inverter_cap"] = float(
        np.maximum(d.gen[:, :, G_IDX["I"]] + d.charge - ts * cap[None, :, T_IDX["I"], None], 0).max()
    ) / ts
    rmax = np.array([r.hydro_reservoir_cap for r in case.regions])
    out["reservoir_cap"] = float(np.maximum(d.reservoir - rmax[None, :, None], 0).max()) / ts
    out["battery_cap"] = float(np.maximum(d.battery - cap[None, :, T_IDX["B"], None], 0).max()) / ts
    if len(case.links):
        out["trans_cap"] = float(np.maximum(d.flow.sum(axis=2) - ts * mix.trans[None, :, None], 0).max()) / ts
    negatives = min(float(a.min(initial=0.0)) for a in (d.gen, d.charge, d.flow, d.reservoir, d.battery, d.shed, d.planned, d.unplanned, d.lol))
    out["nonnegativity"] = max(0.0, -negatives) / ts
    return out


def audit_plan(stepped: SteppedCase, plan: PlanSolution, scenarios: Sequence[SteppedSeries] | None = None) -> dict[str, float]:
    if scenarios is None:
        scenarios = [stepped.get(s.id) for s in plan.scenarios]
    return audit_dispatch(stepped, scenarios, plan.mix, plan.dispatch)
