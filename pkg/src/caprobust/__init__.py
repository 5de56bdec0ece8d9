"""Capacity expansion planning under weather and nuclear outage uncertainty."""

__version__ = "0.1.0"

from .case import (  # noqa: E402
    CaseData,
    Link,
    Region,
    Scalars,
    ScenarioSeries,
    SteppedCase,
    TechnologyParams,
    aggregate_to_steps,
    apply_dunkelflaute,
    capital_recovery_factor,
    generate_synthetic_case,
    mini_case,
    select_scenarios,
    transmission_efficiency,
)
from .outages import Budgets, MonthlyOutageData, OutageMatrix, generate_outage_samples, percentiles, quantile  # noqa: E402
from .simulation import SimSummary, YearResult, price_of_robustness, run_simulation, simulate_year, value_of_stochastic_solution  # noqa: E402
from .wnu import (  # noqa: E402
    NetLoadProfile,
    ParetoEntry,
    SelectionAssignment,
    net_load,
    pareto_update,
    solve_master,
    solve_subproblem,
    solve_wnu,
    sweep_wnu,
)
from .wu import CapacityMix, PlanSolution, build_wu, solve_wu  # noqa: E402

__all__ = [
    "__version__",
    "aggregate_to_steps",
    "apply_dunkelflaute",
    "Budgets",
    "build_wu",
    "CapacityMix",
    "capital_recovery_factor",
    "CaseData",
    "generate_outage_samples",
    "generate_synthetic_case",
    "Link",
    "mini_case",
    "MonthlyOutageData",
    "net_load",
    "NetLoadProfile",
    "OutageMatrix",
    "pareto_update",
    "ParetoEntry",
    "percentiles",
    "PlanSolution",
    "price_of_robustness",
    "quantile",
    "Region",
    "run_simulation",
    "Scalars",
    "ScenarioSeries",
    "select_scenarios",
    "SelectionAssignment",
    "SimSummary",
    "simulate_year",
    "solve_master",
    "solve_subproblem",
    "solve_wnu",
    "solve_wu",
    "SteppedCase",
    "sweep_wnu",
    "TechnologyParams",
    "transmission_efficiency",
    "value_of_stochastic_solution",
    "YearResult",
]
