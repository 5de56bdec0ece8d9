import numpy as np

from caprobust.case import HOURS_PER_YEAR, TECHS, CaseData, Link, Region, Scalars, ScenarioSeries, default_technologies


def flat_case(
    load=1000.0,
    caps=None,
    n_regions=1,
    links=(),
    scalars=None,
    n_years=1,
    cf_wind=0.3,
    cf_solar=0.2,
    inflow=0.0,
    reservoir=0.0,
    outage_data=None,
    load_profile=None,
):
    """Constant-series case; technologies missing from ``caps`` get zero potential."""
    caps = caps or {}
    regions = tuple(
        Region(f"R{k + 1}", {p: float(caps.get(p, 0.0)) for p in TECHS}, hydro_reservoir_cap=reservoir)
        for k in range(n_regions)
    )
    shape = (n_regions, HOURS_PER_YEAR)
    base = np.full(shape, float(load)) if load_profile is None else np.broadcast_to(load_profile, shape)
    years = tuple(
        ScenarioSeries(
            f"Y{y + 1}",
            1.0 / n_years,
            base,
            np.full(shape, cf_wind),
            np.full(shape, cf_solar),
            np.full(shape, inflow),
        )
        for y in range(n_years)
    )
    return CaseData(
        regions=regions,
        links=tuple(Link(*ln) for ln in links),
        technologies=default_technologies(),
        scalars=scalars or Scalars(ts=24),
        years=years,
        outage_data=outage_data,
    )
