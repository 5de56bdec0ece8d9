"""Robust planning against weather and nuclear outage uncertainty.

The adjustable-robust problem is approached heuristically.  For each fleet
size ``n`` and confidence level ``alpha``:

1. solve the master LP with no forced outages and fleet size ``n``;
2. derive the annual / simultaneous outage budgets at level ``alpha``;
3. per weather scenario, pick ``n`` outage rows that hit the steps where the
   interim mix has the least spare capacity (a binary program);
4. re-solve the master LP with those outages forced;
5. simulate the resulting mix over every weather year and record mean cost
   (loss-of-load penalty excluded) and mean loss of load.

The (cost, loss) pairs are reduced to a Pareto front.
"""

from __future__ import annotations

import csv
import functools
import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .case import TECHS, SteppedCase, SteppedSeries, scenario_probabilities, select_scenarios
from .errors import CapRobustError, InvalidParameterError, SolverError
from .lp import Model, SolveOptions, solve
from .outages import Budgets, OutageMatrix, generate_outage_samples, percentiles
from .parallel import ordered_map
from .rng import stream
from .simulation import run_simulation
from .wu import T_IDX, CapacityMix, CostBreakdown, PlanSolution, link_ids, solve_dispatch

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SelectionAssignment:
    """Chosen outage rows per scenario; an empty assignment forces no outages."""

    rows: tuple[tuple[int, ...], ...] = ()

    @classmethod
    def empty(cls) -> "SelectionAssignment":
        return cls(())

    def unplanned_mw(self, outages: OutageMatrix, ts: int, n_scenarios: int, unit: float) -> np.ndarray:
        """Nuclear MW forced offline, (scenarios, steps)."""
        steps = outages.at_steps(ts)
        out = np.zeros((n_scenarios, steps.shape[1]))
        if not self.rows:
            return out
        if len(self.rows) != n_scenarios:
            raise InvalidParameterError(f"assignment covers {len(self.rows)} scenarios, model has {n_scenarios}")
        for s, rows in enumerate(self.rows):
            if rows:
                out[s] = unit * steps[list(rows)].sum(axis=0)
        return out


@dataclass(frozen=True, eq=False)
class NetLoadProfile:
    """Residual demand left for nuclear (MW per step) and its normalised form."""

    gamma: np.ndarray
    gamma_bar: np.ndarray
    ts: int


def net_load(series: SteppedSeries, mix: CapacityMix, n: int, mop: float, unit: float, ts: int) -> NetLoadProfile:
    """Demand not covered by hydro, gas, average renewables and the surviving nuclear units.

    Renewables are credited at each region's mean capacity factor over the
    year, so the profile follows load.  Normalisation divides by
    ``max(1, max gamma)``.
    """
    cap = mix.capacity
    firm = cap[:, T_IDX["H"]].sum() + cap[:, T_IDX["G"]].sum()
    renewable = float((series.cf_wind.mean(axis=1) * cap[:, T_IDX["W"]]).sum())
    renewable += float((series.cf_solar.mean(axis=1) * cap[:, T_IDX["P"]]).sum())
    gamma = np.maximum(0.0, series.load.sum(axis=0) - firm - renewable - unit * (n - mop))
    gamma_bar = gamma / max(1.0, float(gamma.max()))
    return NetLoadProfile(gamma, gamma_bar, ts)


@dataclass(frozen=True)
class SubproblemResult:
    rows: tuple[int, ...]
    objective: float
    status: str  # optimal | fallback


def selection_weights(outages: OutageMatrix, profile: NetLoadProfile) -> np.ndarray:
    return outages.at_steps(profile.ts).astype(float) @ profile.gamma_bar


def _feasible(step_os: np.ndarray, rows, budgets: Budgets, ts: int) -> bool:
    sub = step_os[list(rows)]
    return ts * float(sub.sum()) <= budgets.aop + 1e-9 and float(sub.sum(axis=0).max(initial=0)) <= budgets.mop + 1e-9


def solve_subproblem(
    n: int,
    budgets: Budgets,
    outages: OutageMatrix,
    profile: NetLoadProfile,
    options: SolveOptions | None = None,
) -> SubproblemResult:
    """Choose ``n`` outage rows maximising net-load-weighted outage time within the budgets.

    A zero optimum returns the feasible set with the smallest index sum.
    Budgets too tight for any ``n`` rows fall back to the ``n`` rows with the
    least annual outage, with a warning.
    """
    step_os = outages.at_steps(profile.ts)
    n_rows, T = step_os.shape
    if not 0 <= n <= n_rows:
        raise InvalidParameterError(f"cannot select {n} of {n_rows} outage rows")
    if n == 0:
        return SubproblemResult((), 0.0, "optimal")
    if step_os.shape[1] != profile.gamma_bar.shape[0]:
        raise InvalidParameterError("net-load profile and outage matrix disagree on the number of steps")
    w = selection_weights(outages, profile)
    ts = profile.ts

    def build(obj, sense):
        m = Model(name="subproblem", sense=sense)
        z = m.add_vars("z", (n_rows,), lb=0.0, ub=1.0, binary=True)
        m.add_objective(obj, z)
        m.add_constr("cardinality", {int(i): 1.0 for i in z}, "==", n)
        m.add_constrs("annual_budget", [(ts * step_os.sum(axis=1).astype(float), z, "sum")], "<=", budgets.aop)
        m.add_constrs("simultaneous_budget", [(step_os.T.astype(float), z[None, :], "sum")], "<=", np.full(T, budgets.mop))
        return m, z

    opts = options or SolveOptions()
    model, _ = build(w, "max")
    res = solve(model, opts)
    if res.status == "infeasible":
        order = np.argsort(step_os.sum(axis=1), kind="stable")[:n]
        rows = tuple(sorted(int(i) for i in order))
        msg = f"outage budgets (AOP={budgets.aop}, MOP={budgets.mop}) admit no {n} rows; using least-outage rows"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        log.warning(msg)
        return SubproblemResult(rows, float(np.sum(w[list(rows)])), "fallback")
    if res.x is None:
        raise SolverError(f"sub-problem: solver returned {res.status} ({res.message})", res.status)
    rows = tuple(int(i) for i in np.flatnonzero(res.x > 0.5))
    if not any(w[list(rows)] > 0):
        first = tuple(range(n))
        if _feasible(step_os, first, budgets, ts):
            rows = first
        else:
            model, _ = build(np.arange(n_rows, dtype=float), "min")
            res = solve(model, opts)
            rows = tuple(int(i) for i in np.flatnonzero(res.x > 0.5))
    return SubproblemResult(rows, float(np.sum(w[list(rows)])), "optimal")


# --------------------------------------------------------------------------
# master problem


def solve_master(
    stepped: SteppedCase,
    scenarios: Sequence[SteppedSeries],
    n: int,
    zbar: SelectionAssignment,
    outages: OutageMatrix,
    options: SolveOptions | None = None,
) -> PlanSolution:
    """Plan with exactly ``n`` nuclear units and the outages of ``zbar`` forced in every scenario."""
    unit = stepped.scalars.unit_nuclear
    mw = zbar.unplanned_mw(outages, stepped.ts, len(scenarios), unit)
    return solve_dispatch(stepped, list(scenarios), options, fixed_n=n, unplanned_mw=mw, name="master")


# --------------------------------------------------------------------------
# Pareto front


@dataclass(frozen=True, eq=False)
class ParetoEntry:
    mean_cost: float
    mean_lol: float
    mix: CapacityMix
    n: int
    alpha: float
    seed: int
    breakdown: CostBreakdown | None = None
    budgets: Budgets | None = None


def dominates_weakly(a, b) -> bool:
    """``a`` is no worse than ``b`` on both cost and loss."""
    return a.mean_cost <= b.mean_cost and a.mean_lol <= b.mean_lol


def pareto_update(front: Sequence, candidate) -> list:
    """Insert ``candidate`` unless an entry is at least as good on both axes.

    Entries the candidate matches or beats on both axes are dropped.  Ties
    keep the incumbent.
    """
    if any(dominates_weakly(sol, candidate) for sol in front):
        return list(front)
    kept = [sol for sol in front if not dominates_weakly(candidate, sol)]
    kept.append(candidate)
    return kept


# --------------------------------------------------------------------------
# sweep


@dataclass
class WnuConfig:
    alphas: tuple[float, ...] = (0.5, 0.9)
    n_values: tuple[int, ...] = (2, 3, 4)
    n_samples: int = 5000  # rows in the shared outage matrix
    n_trials: int = 100_000  # Monte Carlo trials per budget estimate
    seed: int = 0
    sim_kind: str = "normal"
    workers: int = 1  # processes for the grid; output does not depend on it

    def __post_init__(self):
        if not self.alphas or not self.n_values:
            raise InvalidParameterError("alphas and n values must be non-empty")
        if any(not 0 < a <= 1 for a in self.alphas):
            raise InvalidParameterError("alphas must lie in (0, 1]")
        if any(n < 0 for n in self.n_values):
            raise InvalidParameterError("n values must be >= 0")
        if self.n_samples < max(self.n_values):
            raise InvalidParameterError("outage sample count must be at least the largest n")
        if self.n_trials < 1:
            raise InvalidParameterError("trial count must be >= 1")
        if self.workers < 1:
            raise InvalidParameterError("workers must be >= 1")


@dataclass
class Candidate:
    n: int
    alpha: float
    budgets: Budgets
    selection: SelectionAssignment
    master_cost: float
    master_cost_no_outage: float
    entry: ParetoEntry


@dataclass
class SweepResult:
    front: list
    candidates: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (n, alpha, message)
    scenario_ids: tuple[str, ...] = ()
    region_ids: tuple[str, ...] = ()
    link_ids: tuple[str, ...] = ()

    def front_sorted(self) -> list:
        return sorted(self.front, key=lambda e: (e.mean_cost, e.mean_lol, e.n, e.alpha))

    def to_dict(self) -> list:
        out = []
        for e in self.front_sorted():
            cap = e.mix.capacity
            out.append(
                {
                    "n": e.n,
                    "alpha": e.alpha,
                    "seed": e.seed,
                    "mean_cost": e.mean_cost,
                    "mean_lol": e.mean_lol,
                    "aop": e.budgets.aop if e.budgets else None,
                    "mop": e.budgets.mop if e.budgets else None,
                    "totals": {p: float(cap[:, k].sum()) for k, p in enumerate(TECHS)} | {"T": float(e.mix.trans.sum())},
                    "capacity": {
                        rid: {p: float(cap[r, k]) for k, p in enumerate(TECHS)} for r, rid in enumerate(self.region_ids)
                    },
                    "trans_capacity": {lid: float(v) for lid, v in zip(self.link_ids, e.mix.trans)},
                    "breakdown": None
                    if e.breakdown is None
                    else {
                        "ic": e.breakdown.ic,
                        "fc": e.breakdown.fc,
                        "oc": e.breakdown.oc,
                        "emissions_cost": e.breakdown.emissions_cost,
                        "shed_cost": e.breakdown.shed_cost,
                    },
                }
            )
        return out

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path) -> None:
        cols = ["n", "alpha", "H", "G", "W", "P", "N", "T", "I", "B", "ic", "fc", "oc", "emissions_cost", "shed_cost", "sc", "lol"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for d in self.to_dict():
                bd = d["breakdown"] or {}
                tot = d["totals"]
                w.writerow(
                    [d["n"], d["alpha"]]
                    + [repr(tot[p]) for p in ("H", "G", "W", "P", "N", "T", "I", "B")]
                    + [repr(bd.get(k, float("nan"))) for k in ("ic", "fc", "oc", "emissions_cost", "shed_cost")]
                    + [repr(d["mean_cost"]), repr(d["mean_lol"])]
                )


def default_scenarios(stepped: SteppedCase, options: SolveOptions | None = None, workers: int = 1) -> list[SteppedSeries]:
    """Favorable, average and unfavorable years weighted 0.2 / 0.4 / 0.4."""
    ids = select_scenarios(stepped, options, workers)
    return [stepped.get(i).with_probability(p) for i, p in zip(ids, scenario_probabilities(3))]


def sweep_wnu(
    stepped: SteppedCase,
    config: WnuConfig,
    scenarios: Sequence[SteppedSeries] | None = None,
    sim_years: Sequence[str] | None = None,
    options: SolveOptions | None = None,
) -> SweepResult:
    """Run the heuristic over every (n, alpha) pair and assemble the Pareto front.

    Cells may run in ``config.workers`` processes; the front is reduced in
    ascending (n, alpha) order afterwards.  Failed cells are logged and
    recorded in ``failures``.
    """
    data = stepped.case.outage_data
    if data is None:
        raise InvalidParameterError("case has no monthly outage data")
    scenarios = list(scenarios) if scenarios is not None else default_scenarios(stepped, options, config.workers)
    outages = generate_outage_samples(config.n_samples, data, stream(config.seed, "samples"))
    result = SweepResult(
        front=[],
        scenario_ids=tuple(s.id for s in scenarios),
        region_ids=tuple(stepped.case.region_ids),
        link_ids=link_ids(stepped),
    )
    n_values, alphas = sorted(set(config.n_values)), sorted(set(config.alphas))
    masters = ordered_map(
        functools.partial(_master_or_failure, stepped, scenarios, outages, options), n_values, config.workers
    )
    cells = []
    for n, base in zip(n_values, masters):
        if isinstance(base, _Failure):
            log.warning("n=%d: master problem failed: %s", n, base.message)
            result.failures.extend((n, a, base.message) for a in alphas)
        else:
            cells.extend((n, a, base) for a in alphas)
    outcomes = ordered_map(
        functools.partial(_cell_or_failure, stepped, scenarios, outages, config, sim_years, options), cells, config.workers
    )
    # sequential reduction in grid order keeps tie-breaking independent of scheduling
    for (n, alpha, _), cand in zip(cells, outcomes):
        if isinstance(cand, _Failure):
            result.failures.append((n, alpha, cand.message))
            log.warning("n=%d alpha=%g failed: %s", n, alpha, cand.message)
            continue
        result.candidates.append(cand)
        result.front = pareto_update(result.front, cand.entry)
        log.info("n=%d alpha=%g cost=%.6g lol=%.6g", n, alpha, cand.entry.mean_cost, cand.entry.mean_lol)
    if not result.front:
        raise SolverError("no (n, alpha) combination produced a solution", diagnostics={f"n={n},alpha={a}": 1.0 for n, a, _ in result.failures})
    return result


@dataclass(frozen=True)
class _Failure:
    message: str


def _master_or_failure(stepped, scenarios, outages, options, n):
    try:
        return solve_master(stepped, scenarios, n, SelectionAssignment.empty(), outages, options)
    except (CapRobustError, ValueError) as exc:
        return _Failure(str(exc))


def _cell_or_failure(stepped, scenarios, outages, config, sim_years, options, cell):
    n, alpha, base = cell
    try:
        return _grid_cell(stepped, scenarios, n, alpha, base, outages, config, sim_years, options)
    except (CapRobustError, ValueError) as exc:
        return _Failure(str(exc))


def _grid_cell(stepped, scenarios, n, alpha, base, outages, config, sim_years, options) -> Candidate:
    unit = stepped.scalars.unit_nuclear
    data = stepped.case.outage_data
    budgets = percentiles(n, alpha, config.n_trials, data, config.seed)
    picks = []
    for s in scenarios:
        profile = net_load(s, base.mix, n, budgets.mop, unit, stepped.ts)
        picks.append(solve_subproblem(n, budgets, outages, profile, options).rows)
    selection = SelectionAssignment(tuple(picks))
    plan = solve_master(stepped, scenarios, n, selection, outages, options)
    mix = plan.mix.cleaned(stepped.case.max_capacity(), stepped.scalars.dt)
    # the fleet must stay an exact multiple of the unit size
    mix = _restore_nuclear(mix, plan.mix)
    summary = run_simulation(stepped, mix, config.sim_kind, config.seed, sim_years, n=n, options=options)
    entry = ParetoEntry(
        mean_cost=summary.mean_cost,
        mean_lol=summary.mean_lol,
        mix=mix,
        n=n,
        alpha=float(alpha),
        seed=config.seed,
        breakdown=summary.mean_breakdown(),
        budgets=budgets,
    )
    return Candidate(n, float(alpha), budgets, selection, plan.sc, base.sc, entry)


def _restore_nuclear(mix: CapacityMix, raw: CapacityMix) -> CapacityMix:
    cap = np.array(mix.capacity)
    cap[:, T_IDX["N"]] = np.maximum(raw.capacity[:, T_IDX["N"]], 0.0)
    return CapacityMix(cap, mix.trans)


def solve_wnu(
    stepped: SteppedCase,
    alphas: Sequence[float],
    n_values: Sequence[int],
    n_samples: int = 5000,
    n_trials: int = 100_000,
    seed: int = 0,
    scenarios: Sequence[SteppedSeries] | None = None,
    sim_years: Sequence[str] | None = None,
    options: SolveOptions | None = None,
    workers: int = 1,
) -> list[ParetoEntry]:
    """Pareto front of (mean simulated cost, mean loss of load), cheapest first."""
    cfg = WnuConfig(tuple(alphas), tuple(n_values), n_samples, n_trials, seed, workers=workers)
    return sweep_wnu(stepped, cfg, scenarios, sim_years, options).front_sorted()
