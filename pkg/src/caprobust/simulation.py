"""Out-of-sample evaluation of a fixed capacity mix.

Each weather year is dispatched on its own with freshly drawn unplanned
nuclear outages and a priced loss-of-load slack, so the LP is always
feasible.  Outage draws for year ``k`` come from sub-stream
``(seed, "sim", k)``; every simulation kind reuses them, which makes kinds
directly comparable year by year.
"""

from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .case import SteppedCase, SteppedSeries, aggregate_series, apply_dunkelflaute
from .errors import InvalidParameterError, SolverError
from .lp import SolveOptions
from .outages import generate_outage_samples
from .parallel import ordered_map
from .rng import stream
from .wu import CapacityMix, CostBreakdown, audit_dispatch, solve_dispatch

KINDS = ("no-outage", "normal", "unfavorable-weather", "dunkelflaute")
LOL_EPS = 1e-6  # MWh; smaller values count as no loss of load


@dataclass(frozen=True)
class YearResult:
    year_id: str
    sc_with_penalty: float
    cost: float  # penalty excluded
    lol: float  # MWh
    lol_fraction: float
    breakdown: CostBreakdown
    outage_unit_hours: float
    audit: dict

    def to_dict(self) -> dict:
        return {
            "year": self.year_id,
            "sc_with_penalty": self.sc_with_penalty,
            "cost": self.cost,
            "lol": self.lol,
            "lol_fraction": self.lol_fraction,
            "outage_unit_hours": self.outage_unit_hours,
        }


@dataclass(frozen=True)
class SimSummary:
    kind: str
    seed: int
    years: tuple[YearResult, ...]

    @property
    def costs(self) -> np.ndarray:
        return np.array([y.cost for y in self.years])

    @property
    def mean_cost(self) -> float:
        return float(self.costs.mean())

    @property
    def std_cost(self) -> float:
        return float(self.costs.std())

    @property
    def max_cost(self) -> float:
        return float(self.costs.max())

    @property
    def mean_sc_with_penalty(self) -> float:
        return float(np.mean([y.sc_with_penalty for y in self.years]))

    @property
    def mean_lol(self) -> float:
        return float(np.mean([y.lol for y in self.years]))

    @property
    def lol_years(self) -> int:
        return sum(y.lol > LOL_EPS for y in self.years)

    @property
    def lol_frequency(self) -> float:
        return self.lol_years / len(self.years)

    @property
    def mean_lol_fraction(self) -> float:
        return float(np.mean([y.lol_fraction for y in self.years]))

    def mean_breakdown(self) -> CostBreakdown:
        fields = ("ic", "fc", "oc", "emissions_cost", "shed_cost", "lol_cost")
        return CostBreakdown(**{f: float(np.mean([getattr(y.breakdown, f) for y in self.years])) for f in fields})

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "mean_cost": self.mean_cost,
            "std_cost": self.std_cost,
            "max_cost": self.max_cost,
            "mean_sc_with_penalty": self.mean_sc_with_penalty,
            "mean_lol": self.mean_lol,
            "lol_years": self.lol_years,
            "n_years": len(self.years),
            "mean_lol_fraction": self.mean_lol_fraction,
            "years": [y.to_dict() for y in self.years],
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["year", "sc", "lol_mwh", "lol_fraction"])
            for y in self.years:
                w.writerow([y.year_id, repr(y.cost), repr(y.lol), repr(y.lol_fraction)])


def nuclear_units(mix: CapacityMix, unit_size: float) -> tuple[int, float]:
    """Whole number of units and their size for the nuclear fleet of ``mix``.

    A fleet that is not a multiple of ``unit_size`` is split into
    ``ceil(total / unit_size)`` equal units.
    """
    total = mix.total("N")
    if total <= 1e-6:
        return 0, unit_size
    n = math.ceil(total / unit_size - 1e-6)
    return n, total / n


def simulate_year(
    stepped: SteppedCase,
    mix: CapacityMix,
    n: int,
    year: SteppedSeries,
    rng: np.random.Generator | None,
    *,
    unit_size: float | None = None,
    outages: bool = True,
    options: SolveOptions | None = None,
) -> YearResult:
    """Dispatch one year on a fixed mix with ``n`` nuclear units subject to random outages."""
    unit = stepped.scalars.unit_nuclear if unit_size is None else unit_size
    total_n = mix.total("N")
    if n < 0 or abs(unit * n - total_n) > 1e-6 * max(1.0, total_n):
        raise InvalidParameterError(f"{n} units of {unit} MW do not match the {total_n:.6g} MW nuclear fleet")
    T = stepped.n_steps
    drawn = 0.0
    unplanned = np.zeros((1, T))
    if outages and n > 0:
        data = stepped.case.outage_data
        if data is None:
            raise InvalidParameterError("case has no monthly outage data")
        if rng is None:
            raise InvalidParameterError("an RNG is required to draw outages")
        rows = generate_outage_samples(n, data, rng)
        unplanned[0] = unit * rows.at_steps(stepped.ts).sum(axis=0)
        drawn = float(rows.annual_hours().sum())
    scen = year.with_probability(1.0)
    try:
        plan = solve_dispatch(
            stepped, [scen], options, fixed_mix=mix, unplanned_mw=unplanned, loss_of_load=True, name="simulation"
        )
    except SolverError as exc:
        # the loss-of-load slack keeps the LP feasible, so this is a modelling bug
        raise AssertionError(f"simulation LP for year {year.id} failed: {exc}") from exc
    lol = plan.scenarios[0].lol
    bd = plan.breakdown
    demand = stepped.ts * float(year.load.sum())
    return YearResult(
        year_id=year.id,
        sc_with_penalty=plan.sc,
        cost=plan.sc - stepped.scalars.big_m_lol * lol,
        lol=lol,
        lol_fraction=lol / demand if demand > 0 else 0.0,
        breakdown=bd,
        outage_unit_hours=drawn,
        audit=audit_dispatch(stepped, [scen], mix, plan.dispatch),
    )


def _year_series(stepped: SteppedCase, kind: str, year_id: str, worst_year: str | None, dunkelflaute: dict) -> SteppedSeries:
    if kind == "unfavorable-weather":
        return stepped.get(worst_year)
    if kind == "dunkelflaute":
        hourly = apply_dunkelflaute(stepped.case.year(year_id), **dunkelflaute)
        return aggregate_series(hourly, stepped.ts)
    return stepped.get(year_id)


def _run_year(stepped, mix, kind, seed, n, unit, worst_year, df, options, item) -> YearResult:
    k, yid = item
    series = _year_series(stepped, kind, yid, worst_year, df)
    res = simulate_year(
        stepped, mix, n, series, stream(seed, "sim", k), unit_size=unit, outages=kind != "no-outage", options=options
    )
    return res if series.id == yid else replace(res, year_id=yid)


def run_simulation(
    stepped: SteppedCase,
    mix: CapacityMix,
    kind: str,
    seed: int,
    years: Sequence[str] | None = None,
    *,
    n: int | None = None,
    worst_year: str | None = None,
    dunkelflaute: dict | None = None,
    options: SolveOptions | None = None,
    workers: int = 1,
) -> SimSummary:
    """Simulate ``mix`` over ``years`` (all case years by default).

    ``worst_year`` is required for the unfavorable-weather kind; see
    :func:`worst_year_id` to derive it from deterministic plans.
    """
    if kind not in KINDS:
        raise InvalidParameterError(f"unknown simulation kind {kind!r}; choose one of {', '.join(KINDS)}")
    ids = [s.id for s in stepped.series] if years is None else list(years)
    if not ids:
        raise InvalidParameterError("at least one simulation year is required")
    if kind == "unfavorable-weather" and worst_year is None:
        raise InvalidParameterError("unfavorable-weather simulation needs worst_year")
    if n is None:
        n, unit = nuclear_units(mix, stepped.scalars.unit_nuclear)
    else:
        unit = stepped.scalars.unit_nuclear
    df = {"start_day": 32, "duration": 14, "intensity": 0.4, **(dunkelflaute or {})}
    run_year = functools.partial(_run_year, stepped, mix, kind, seed, n, unit, worst_year, df, options)
    results = ordered_map(run_year, list(enumerate(ids)), workers)
    return SimSummary(kind, seed, tuple(results))


def worst_year_id(stepped: SteppedCase, options: SolveOptions | None = None, workers: int = 1) -> str:
    """Year whose deterministic plan is the most expensive."""
    from .case import rank_years

    costs = rank_years(stepped, options, workers)
    return stepped.series[int(np.argmax(costs))].id


def value_of_stochastic_solution(sc_deterministic: float, sc_stochastic: float) -> float:
    return sc_deterministic - sc_stochastic


def price_of_robustness(sc_most_conservative: float, sc_least_conservative: float) -> tuple[float, float]:
    """Absolute and relative cost increase of the most conservative plan."""
    diff = sc_most_conservative - sc_least_conservative
    if diff == 0:
        return 0.0, 0.0
    return diff, diff / sc_least_conservative


__all__ = [
    "KINDS",
    "SimSummary",
    "YearResult",
    "nuclear_units",
    "price_of_robustness",
    "run_simulation",
    "simulate_year",
    "value_of_stochastic_solution",
    "worst_year_id",
]
