"""Problem instances: technologies, regions, links, yearly series.

Everything downstream consumes the types defined here.  Arrays stored on the
dataclasses are float64 copies flagged read-only, so instances can be shared
freely between threads and processes.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import DataValidationError, InvalidParameterError
from .rng import stream

if TYPE_CHECKING:  # pragma: no cover
    from .outages import MonthlyOutageData

HOURS_PER_YEAR = 8760
MONTH_HOURS = (744, 672, 744, 720, 744, 720, 744, 744, 720, 744, 720, 744)
MONTH_STARTS = tuple(int(x) for x in np.concatenate([[0], np.cumsum(MONTH_HOURS)[:-1]]))

# G gas, P solar, W wind, H hydro, N nuclear, B battery energy, I battery inverter
TECHS = ("G", "P", "W", "H", "N", "B", "I")
# technologies with a dispatch variable; battery charging is tracked separately
GEN_TECHS = ("G", "P", "W", "H", "N", "I")


def _frozen(a, ndim=None, name="array") -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise DataValidationError(f"{name}: expected {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TechnologyParams:
    """Cost and performance data of one technology.

    Monetary values are per MW of capacity (per MWh for battery energy).
    """

    inv_cost: float
    fixed_cost: float
    var_cost: float
    fuel_cost: float
    efficiency: float
    lifetime: float
    emission_factor: float

    def __post_init__(self):
        for name in ("inv_cost", "fixed_cost", "var_cost", "fuel_cost", "emission_factor"):
            if not getattr(self, name) >= 0:
                raise DataValidationError(f"{name} must be >= 0")
        if not 0 < self.efficiency <= 1:
            raise DataValidationError("efficiency must lie in (0, 1]")
        if not self.lifetime >= 1:
            raise DataValidationError("lifetime must be >= 1 year")

    @property
    def marginal_cost(self) -> float:
        """Operating cost per MWh of output (fuel through efficiency plus variable O&M)."""
        return self.fuel_cost / self.efficiency + self.var_cost

    @property
    def emission_rate(self) -> float:
        """tCO2 per MWh of output."""
        return self.emission_factor / self.efficiency


def default_technologies() -> dict[str, TechnologyParams]:
    """Cost table of the Northern-Europe study, converted to per-MW units."""
    kw = 1000.0
    return {
        "H": TechnologyParams(0.0, 30000.0, 0.0, 0.0, 0.9, 80, 0.0),
        "G": TechnologyParams(436 * kw, 7893.0, 4.79, 32.0, 0.43, 25, 0.202),
        "W": TechnologyParams(1090 * kw, 15602.0, 1.85, 0.0, 1.0, 30, 0.0),
        "P": TechnologyParams(290 * kw, 9900.0, 0.0, 0.0, 1.0, 40, 0.0),
        "B": TechnologyParams(65 * kw, 0.0, 0.0, 0.0, 1.0, 15, 0.0),
        "I": TechnologyParams(200 * kw, 38000.0, 0.0, 0.0, 0.92, 15, 0.0),
        "N": TechnologyParams(4000 * kw, 126000.0, 1.9, 3.0, 0.33, 40, 0.0),
    }


@dataclass(frozen=True)
class Scalars:
    ts: int = 7
    discount_rate: float = 0.05
    loss_per_1000km: float = 0.016
    dt: float = 4.0
    sr: float = 0.05
    beta: float = 0.15
    c_tax: float = 150.0
    c_shed: float = 1000.0
    big_m_lol: float = 10000.0
    unit_nuclear: float = 1000.0  # MW per nuclear unit
    c_trans: float = 400.0  # currency per MW per km
    trans_lifetime: float = 40.0

    def __post_init__(self):
        if not (isinstance(self.ts, (int, np.integer)) and 1 <= self.ts <= HOURS_PER_YEAR):
            raise DataValidationError("ts must be an integer in [1, 8760]")
        if not 0 <= self.sr <= 1:
            raise DataValidationError("sr must lie in [0, 1]")
        if not 0 <= self.beta < 1:
            raise DataValidationError("beta must lie in [0, 1)")
        for name in ("c_tax", "c_shed", "big_m_lol", "c_trans"):
            if not getattr(self, name) >= 0:
                raise DataValidationError(f"{name} must be >= 0")
        if not self.unit_nuclear > 0:
            raise DataValidationError("unit_nuclear must be > 0")
        if not 0 <= self.loss_per_1000km < 1:
            raise DataValidationError("loss_per_1000km must lie in [0, 1)")


@dataclass(frozen=True)
class Region:
    id: str
    max_capacity: Mapping[str, float]
    hydro_reservoir_cap: float = 0.0

    def __post_init__(self):
        caps = {p: float(self.max_capacity.get(p, math.inf)) for p in TECHS}
        unknown = set(self.max_capacity) - set(TECHS)
        if unknown:
            raise DataValidationError(f"region {self.id}: unknown technologies {sorted(unknown)}")
        if any(not v >= 0 for v in caps.values()):
            raise DataValidationError(f"region {self.id}: max_capacity must be >= 0")
        if not self.hydro_reservoir_cap >= 0:
            raise DataValidationError(f"region {self.id}: hydro_reservoir_cap must be >= 0")
        object.__setattr__(self, "max_capacity", caps)


@dataclass(frozen=True)
class Link:
    """Candidate transmission corridor between two regions (ids)."""

    a: str
    b: str
    distance: float

    def __post_init__(self):
        if self.a == self.b:
            raise DataValidationError(f"self-link at {self.a}")
        if not self.distance > 0:
            raise DataValidationError(f"link {self.a}-{self.b}: distance must be > 0")


@dataclass(frozen=True, eq=False)
class ScenarioSeries:
    """One weather/load year at hourly resolution.

    ``load``, ``cf_wind``, ``cf_solar`` and ``inflow`` are (regions, 8760)
    arrays in region order of the owning case; load and inflow in MW.
    """

    id: str
    probability: float
    load: np.ndarray
    cf_wind: np.ndarray
    cf_solar: np.ndarray
    inflow: np.ndarray

    def __post_init__(self):
        for name in ("load", "cf_wind", "cf_solar", "inflow"):
            arr = _frozen(getattr(self, name), ndim=2, name=f"{self.id}.{name}")
            object.__setattr__(self, name, arr)
        shape = self.load.shape
        for name in ("cf_wind", "cf_solar", "inflow"):
            if getattr(self, name).shape != shape:
                raise DataValidationError(f"{self.id}.{name}: shape {getattr(self, name).shape} != load {shape}")
        if not np.all(np.isfinite(self.load)) or np.any(self.load < 0):
            raise DataValidationError(f"{self.id}: load must be finite and >= 0")
        if np.any(self.inflow < 0) or not np.all(np.isfinite(self.inflow)):
            raise DataValidationError(f"{self.id}: inflow must be finite and >= 0")
        for name in ("cf_wind", "cf_solar"):
            arr = getattr(self, name)
            if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
                raise DataValidationError(f"{self.id}.{name}: capacity factors must lie in [0, 1]")
        if not 0 <= self.probability <= 1:
            raise DataValidationError(f"{self.id}: probability must lie in [0, 1]")

    @property
    def n_hours(self) -> int:
        return self.load.shape[1]

    def with_probability(self, p: float) -> "ScenarioSeries":
        return replace(self, probability=float(p))


@dataclass(frozen=True, eq=False)
class CaseData:
    regions: tuple[Region, ...]
    links: tuple[Link, ...]
    technologies: Mapping[str, TechnologyParams]
    scalars: Scalars
    years: tuple[ScenarioSeries, ...]
    outage_data: "MonthlyOutageData | None" = None

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "years", tuple(self.years))
        ids = [r.id for r in self.regions]
        if len(set(ids)) != len(ids):
            raise DataValidationError("duplicate region ids")
        missing = set(TECHS) - set(self.technologies)
        if missing:
            raise DataValidationError(f"missing technology parameters for {sorted(missing)}")
        pos = {rid: k for k, rid in enumerate(ids)}
        seen = set()
        for ln in self.links:
            if ln.a not in pos or ln.b not in pos:
                raise DataValidationError(f"link {ln.a}-{ln.b} references an unknown region")
            if pos[ln.b] < pos[ln.a]:
                raise DataValidationError(f"link {ln.a}-{ln.b}: endpoints must be ordered by region position")
            key = (ln.a, ln.b)
            if key in seen:
                raise DataValidationError(f"duplicate link {ln.a}-{ln.b}")
            seen.add(key)
        year_ids = [y.id for y in self.years]
        if len(set(year_ids)) != len(year_ids):
            raise DataValidationError("duplicate year ids")
        for y in self.years:
            if y.load.shape != (len(self.regions), HOURS_PER_YEAR):
                raise DataValidationError(
                    f"series {y.id}: expected shape {(len(self.regions), HOURS_PER_YEAR)}, got {y.load.shape}"
                )

    @property
    def region_ids(self) -> list[str]:
        return [r.id for r in self.regions]

    def region_pos(self, rid: str) -> int:
        return self.region_ids.index(rid)

    def link_pairs(self) -> list[tuple[int, int]]:
        pos = {rid: k for k, rid in enumerate(self.region_ids)}
        return [(pos[ln.a], pos[ln.b]) for ln in self.links]

    def max_capacity(self) -> np.ndarray:
        """(regions, techs) upper bounds in TECHS order."""
        return np.array([[r.max_capacity[p] for p in TECHS] for r in self.regions])

    def year(self, year_id: str) -> ScenarioSeries:
        for y in self.years:
            if y.id == year_id:
                return y
        raise KeyError(year_id)


def capital_recovery_factor(i: float, lifetime: float) -> float:
    """Annuity factor turning an overnight investment into a yearly payment."""
    if not i > 0:
        raise InvalidParameterError("discount rate must be > 0")
    if not lifetime >= 1:
        raise InvalidParameterError("lifetime must be >= 1")
    return i / (1.0 - (1.0 + i) ** (-lifetime))


def transmission_efficiency(distance: float, loss_rate: float) -> float:
    """Fraction of power delivered over ``distance`` km at ``loss_rate`` per 1000 km."""
    if not 0 <= loss_rate < 1:
        raise InvalidParameterError("loss rate must lie in [0, 1)")
    if not distance > 0:
        raise InvalidParameterError("distance must be > 0")
    return (1.0 - loss_rate) ** (distance / 1000.0)


# --------------------------------------------------------------------------
# time aggregation


@dataclass(frozen=True, eq=False)
class SteppedSeries:
    """A ScenarioSeries averaged over blocks of ``ts`` hours, arrays (regions, steps)."""

    id: str
    probability: float
    load: np.ndarray
    cf_wind: np.ndarray
    cf_solar: np.ndarray
    inflow: np.ndarray

    def __post_init__(self):
        for name in ("load", "cf_wind", "cf_solar", "inflow"):
            object.__setattr__(self, name, _frozen(getattr(self, name), ndim=2, name=name))

    def with_probability(self, p: float) -> "SteppedSeries":
        return replace(self, probability=float(p))


@dataclass(frozen=True, eq=False)
class SteppedCase:
    case: CaseData
    ts: int
    series: tuple[SteppedSeries, ...]

    @property
    def n_steps(self) -> int:
        return HOURS_PER_YEAR // self.ts

    @property
    def first_hours(self) -> np.ndarray:
        """0-based index of the first hour of every step."""
        return np.arange(self.n_steps) * self.ts

    @property
    def scalars(self) -> Scalars:
        return self.case.scalars

    def get(self, series_id: str) -> SteppedSeries:
        for s in self.series:
            if s.id == series_id:
                return s
        raise KeyError(series_id)


def _step_mean(arr: np.ndarray, ts: int) -> np.ndarray:
    n_steps = arr.shape[1] // ts
    return arr[:, : n_steps * ts].reshape(arr.shape[0], n_steps, ts).mean(axis=2)


def aggregate_series(series: ScenarioSeries, ts: int) -> SteppedSeries:
    if not 1 <= ts <= series.n_hours:
        raise InvalidParameterError(f"ts must lie in [1, {series.n_hours}]")
    return SteppedSeries(
        id=series.id,
        probability=series.probability,
        load=_step_mean(series.load, ts),
        cf_wind=np.clip(_step_mean(series.cf_wind, ts), 0.0, 1.0),
        cf_solar=np.clip(_step_mean(series.cf_solar, ts), 0.0, 1.0),
        inflow=_step_mean(series.inflow, ts),
    )


def aggregate_to_steps(case: CaseData, ts: int | None = None) -> SteppedCase:
    """Average every yearly series over consecutive blocks of ``ts`` hours.

    Trailing hours that do not fill a whole step are dropped, so there are
    ``8760 // ts`` steps.  Energy per step is the mean rate times ``ts``.
    """
    ts = case.scalars.ts if ts is None else int(ts)
    if ts < 1 or ts > HOURS_PER_YEAR:
        raise InvalidParameterError(f"ts must lie in [1, {HOURS_PER_YEAR}], got {ts}")
    if ts != case.scalars.ts:
        case = replace(case, scalars=replace(case.scalars, ts=ts))
    return SteppedCase(case=case, ts=ts, series=tuple(aggregate_series(y, ts) for y in case.years))


def apply_dunkelflaute(
    series: ScenarioSeries, start_day: int = 32, duration: int = 14, intensity: float = 0.4
) -> ScenarioSeries:
    """Scale wind and solar capacity factors by ``intensity`` over a window of whole days.

    The window covers 1-based hours ``(start_day-1)*24+1`` through
    ``(start_day+duration-1)*24``.  Load, inflow and hours outside the window
    are left bit-identical.
    """
    if not (1 <= start_day and duration >= 1 and start_day + duration - 1 <= 365):
        raise InvalidParameterError("Dunkelflaute window must lie within days 1..365")
    if not 0 <= intensity <= 1:
        raise InvalidParameterError("intensity must lie in [0, 1]")
    lo, hi = (start_day - 1) * 24, (start_day + duration - 1) * 24
    wind = np.array(series.cf_wind)
    solar = np.array(series.cf_solar)
    wind[:, lo:hi] *= intensity
    solar[:, lo:hi] *= intensity
    return replace(series, cf_wind=wind, cf_solar=solar)


# --------------------------------------------------------------------------
# scenario selection


def pick_scenarios(costs: Sequence[float]) -> tuple[int, int, int]:
    """Indices of the cheapest, closest-to-mean and most expensive year.

    Ties resolve to the lowest index.
    """
    c = np.asarray(costs, dtype=float)
    if c.size < 3:
        raise InvalidParameterError("scenario selection needs at least 3 years")
    fav = int(np.argmin(c))
    unfav = int(np.argmax(c))
    avg = int(np.argmin(np.abs(c - c.mean())))
    return fav, avg, unfav


def _year_cost(stepped: SteppedCase, options, year_id: str) -> float:
    from .errors import SolverError
    from .wu import solve_wu

    try:
        return solve_wu(stepped, [stepped.get(year_id).with_probability(1.0)], options=options).sc
    except SolverError as exc:
        exc.tag = f"year {year_id}"
        raise


def rank_years(stepped: SteppedCase, options=None, workers: int = 1) -> np.ndarray:
    """System cost of the deterministic plan of every year (probability 1, no unplanned outages)."""
    from .parallel import ordered_map

    ids = [s.id for s in stepped.series]
    return np.array(ordered_map(functools.partial(_year_cost, stepped, options), ids, workers))


def select_scenarios(stepped: SteppedCase, options=None, workers: int = 1) -> tuple[str, str, str]:
    """Favorable, average and unfavorable year ids ranked by deterministic system cost."""
    if len(stepped.series) < 3:
        raise InvalidParameterError("scenario selection needs at least 3 years")
    costs = rank_years(stepped, options, workers)
    fav, avg, unfav = pick_scenarios(costs)
    return stepped.series[fav].id, stepped.series[avg].id, stepped.series[unfav].id


# --------------------------------------------------------------------------
# synthetic instances


def _synthetic_year(rng: np.random.Generator, year_id: str, n_regions: int, profile: dict) -> ScenarioSeries:
    h = np.arange(HOURS_PER_YEAR)
    day = h // 24
    hod = h % 24

    # load: winter-peaked season, day/night cycle, daily weather noise
    season = 1.0 + 0.18 * np.cos(2 * np.pi * (day - 15) / 365)
    daily = 1.0 + 0.12 * np.sin(2 * np.pi * (hod - 8) / 24)
    year_scale = 1.0 + 0.03 * rng.standard_normal()
    cold = np.zeros(365)
    e = rng.standard_normal(365) * 0.03
    for d in range(1, 365):
        cold[d] = 0.85 * cold[d - 1] + e[d]
    load = np.empty((n_regions, HOURS_PER_YEAR))
    for r in range(n_regions):
        noise = 0.01 * rng.standard_normal(HOURS_PER_YEAR)
        load[r] = profile["base_load"][r] * year_scale * season * daily * (1 + cold[day]) * (1 + noise)
    load = np.maximum(load, 0.0)

    # wind: shared and local AR(1) latent processes through a logistic link
    def ar1(phi, n):
        x = np.empty(n)
        eps = rng.standard_normal(n) * math.sqrt(1 - phi**2)
        x[0] = rng.standard_normal()
        for k in range(1, n):
            x[k] = phi * x[k - 1] + eps[k]
        return x

    common = ar1(0.985, HOURS_PER_YEAR)
    year_wind = 0.35 * rng.standard_normal()
    wind_season = 0.45 * np.cos(2 * np.pi * (day - 15) / 365)
    cf_wind = np.empty((n_regions, HOURS_PER_YEAR))
    for r in range(n_regions):
        latent = 0.75 * common + 0.66 * ar1(0.97, HOURS_PER_YEAR)
        z = profile["wind_bias"][r] + year_wind + wind_season + 1.4 * latent
        cf_wind[r] = 0.95 / (1.0 + np.exp(-z))

    # solar: clear-sky diurnal shape, summer-peaked amplitude, daily cloudiness
    clear = np.maximum(0.0, np.sin(np.pi * (hod - 6) / 12))
    amp = 0.55 + 0.45 * np.cos(2 * np.pi * (day - 172) / 365)
    cf_solar = np.empty((n_regions, HOURS_PER_YEAR))
    for r in range(n_regions):
        cloud = rng.beta(2.5, 1.5, size=365)
        cf_solar[r] = np.clip(profile["solar_peak"][r] * clear * amp * cloud[day], 0.0, 1.0)

    # inflow: spring melt peak scaled to the region's mean inflow
    melt = 0.35 + 2.2 * np.exp(-(((day - 140) / 28.0) ** 2))
    melt = melt / melt.mean()
    inflow = np.empty((n_regions, HOURS_PER_YEAR))
    wet = max(0.2, 1.0 + 0.12 * rng.standard_normal())
    for r in range(n_regions):
        inflow[r] = profile["mean_inflow"][r] * wet * melt
    return ScenarioSeries(year_id, 0.0, load, np.clip(cf_wind, 0, 1), cf_solar, inflow)


def synthetic_outage_data(rng: np.random.Generator, n_samples: int = 60) -> "MonthlyOutageData":
    """Monthly unplanned outage hours resembling plant-year records.

    Most months are outage free; incidents last from hours to weeks, and a
    small share of plant-years contain a multi-month breakdown.
    """
    from .outages import MonthlyOutageData

    hours = np.array(MONTH_HOURS)
    data = np.zeros((n_samples, 12), dtype=np.int64)
    p_month = 0.16 + 0.06 * np.cos(2 * np.pi * (np.arange(12) - 6.5) / 12)
    for i in range(n_samples):
        hit = rng.random(12) < p_month
        dur = np.ceil(rng.exponential(90.0, size=12)).astype(np.int64)
        data[i] = np.where(hit, np.minimum(dur, hours), 0)
        if rng.random() < 0.08:
            m0 = int(rng.integers(0, 11))
            span = int(rng.integers(1, 3))
            data[i, m0 : m0 + span] = hours[m0 : m0 + span]
    return MonthlyOutageData(data)


def generate_synthetic_case(seed: int, n_regions: int = 3, n_years: int = 4, ts: int = 24) -> CaseData:
    """Deterministic stand-in for a historical weather/load dataset.

    Region 1 carries reservoir hydro; wind and solar potentials are capped so
    that nuclear and gas both enter the optimal mix.
    """
    if n_regions < 2:
        raise InvalidParameterError("n_regions must be >= 2")
    if n_years < 1:
        raise InvalidParameterError("n_years must be >= 1")
    rng = stream(seed, "case", "static")
    ids = [f"R{k + 1}" for k in range(n_regions)]
    base_load = rng.uniform(1500.0, 2500.0, size=n_regions)
    profile = {
        "base_load": base_load,
        "wind_bias": rng.uniform(-1.3, -0.7, size=n_regions),
        "solar_peak": np.linspace(0.55, 0.8, n_regions),
        "mean_inflow": np.where(np.arange(n_regions) == 0, 600.0, 0.0),
    }
    regions = []
    for k, rid in enumerate(ids):
        hydro = 1000.0 if k == 0 else 0.0
        regions.append(
            Region(
                rid,
                {
                    "H": hydro,
                    "W": float(np.round(base_load[k] * rng.uniform(1.0, 1.4), -1)),
                    "P": float(np.round(base_load[k] * rng.uniform(1.0, 1.6), -1)),
                },
                hydro_reservoir_cap=7.5e5 if k == 0 else 0.0,
            )
        )
    links = [Link(ids[k], ids[k + 1], float(np.round(rng.uniform(300, 900)))) for k in range(n_regions - 1)]
    if n_regions >= 3:
        links.append(Link(ids[0], ids[2], float(np.round(rng.uniform(600, 1200)))))
    years = []
    for y in range(n_years):
        years.append(_synthetic_year(stream(seed, "case", "year", y), f"Y{y + 1:02d}", n_regions, profile))
    p = 1.0 / n_years
    years = [y.with_probability(p) for y in years]
    outage_data = synthetic_outage_data(stream(seed, "case", "outages"))
    return CaseData(
        regions=tuple(regions),
        links=tuple(links),
        technologies=default_technologies(),
        scalars=Scalars(ts=ts),
        years=tuple(years),
        outage_data=outage_data,
    )


def mini_case(n_years: int = 3) -> CaseData:
    """The bundled three-region test instance (seed 1, daily steps)."""
    return generate_synthetic_case(seed=1, n_regions=3, n_years=n_years, ts=24)


def scenario_probabilities(n: int) -> list[float]:
    """Favorable/average/unfavorable weights used by the reference study."""
    if n == 3:
        return [0.2, 0.4, 0.4]
    return [1.0 / n] * n


__all__ = [
    "HOURS_PER_YEAR",
    "MONTH_HOURS",
    "MONTH_STARTS",
    "TECHS",
    "GEN_TECHS",
    "TechnologyParams",
    "Scalars",
    "Region",
    "Link",
    "ScenarioSeries",
    "CaseData",
    "SteppedSeries",
    "SteppedCase",
    "capital_recovery_factor",
    "transmission_efficiency",
    "aggregate_series",
    "aggregate_to_steps",
    "apply_dunkelflaute",
    "pick_scenarios",
    "rank_years",
    "select_scenarios",
    "generate_synthetic_case",
    "mini_case",
    "default_technologies",
    "synthetic_outage_data",
    "scenario_probabilities",
]
