import csv
import json

import numpy as np
import pytest

from caprobust.case import Scalars, aggregate_to_steps
from caprobust.errors import InvalidParameterError
from caprobust.rng import stream
from caprobust.simulation import (
    nuclear_units,
    price_of_robustness,
    run_simulation,
    simulate_year,
    value_of_stochastic_solution,
    worst_year_id,
)
from caprobust.wu import T_IDX, CapacityMix, solve_wu

from .helpers import flat_case
from .test_wu import gas_energy_cost, gas_yearly_capacity_cost

AUDIT_TOL = 1e-4


def gas_mix(mw):
    cap = np.zeros((1, 7))
    cap[0, T_IDX["G"]] = mw
    return CapacityMix(cap, np.zeros(0))


@pytest.fixture(scope="module")
def fleet_plan(weekly):
    return solve_wu(weekly, fixed_n=2)


@pytest.fixture(scope="module")
def normal(weekly, fleet_plan):
    return run_simulation(weekly, fleet_plan.mix, "normal", seed=5)


class TestFlatCases:
    def test_generous_mix_has_no_loss(self):
        st_ = aggregate_to_steps(flat_case(load=1000.0, caps={"G": np.inf}), 24)
        res = simulate_year(st_, gas_mix(2000.0), 0, st_.series[0], None)
        assert res.lol == 0.0 and res.lol_fraction == 0.0
        # idle capacity still pays its annuity and fixed cost
        expected = 2000.0 * gas_yearly_capacity_cost() + 8760 * 1000.0 * gas_energy_cost()
        assert res.cost == pytest.approx(expected, rel=1e-7)

    def test_empty_mix_loses_all_demand(self):
        st_ = aggregate_to_steps(flat_case(load=1000.0, scalars=Scalars(ts=24, sr=0.0)), 24)
        res = simulate_year(st_, gas_mix(0.0), 0, st_.series[0], None)
        assert res.lol == pytest.approx(8760 * 1000.0, rel=1e-9)
        assert res.lol_fraction == pytest.approx(1.0)
        assert res.sc_with_penalty == pytest.approx(res.cost + st_.scalars.big_m_lol * res.lol, rel=1e-12)

    def test_shedding_absorbs_first(self):
        st_ = aggregate_to_steps(flat_case(load=1000.0), 24)
        res = simulate_year(st_, gas_mix(0.0), 0, st_.series[0], None)
        assert res.lol == pytest.approx(0.95 * 8760 * 1000.0, rel=1e-9)

    def test_no_units_no_outages(self, outage_data):
        st_ = aggregate_to_steps(flat_case(caps={"G": np.inf}, outage_data=outage_data), 24)
        res = simulate_year(st_, gas_mix(1000.0), 0, st_.series[0], stream(1))
        assert res.outage_unit_hours == 0.0

    def test_fleet_mismatch(self):
        st_ = aggregate_to_steps(flat_case(caps={"G": np.inf}), 24)
        with pytest.raises(InvalidParameterError):
            simulate_year(st_, gas_mix(1000.0), 1, st_.series[0], stream(1))


class TestSyntheticSimulation:
    def test_audits(self, normal):
        for y in normal.years:
            assert max(y.audit.values()) <= AUDIT_TOL, (y.year_id, y.audit)

    def test_every_year_simulated(self, weekly, normal):
        assert [y.year_id for y in normal.years] == [s.id for s in weekly.series]
        assert all(y.outage_unit_hours >= 0 for y in normal.years)

    def test_no_outage_is_cheaper(self, weekly, fleet_plan, normal):
        base = run_simulation(weekly, fleet_plan.mix, "no-outage", seed=5)
        for a, b in zip(base.years, normal.years):
            assert a.sc_with_penalty <= b.sc_with_penalty * (1 + 1e-9)
            assert a.outage_unit_hours == 0

    def test_unit_intensity_dunkelflaute_matches_normal(self, weekly, fleet_plan, normal):
        df = run_simulation(weekly, fleet_plan.mix, "dunkelflaute", seed=5, dunkelflaute={"intensity": 1.0})
        for a, b in zip(df.years, normal.years):
            assert a.sc_with_penalty == pytest.approx(b.sc_with_penalty, rel=1e-9)

    def test_dunkelflaute_not_cheaper(self, weekly, fleet_plan, normal):
        df = run_simulation(weekly, fleet_plan.mix, "dunkelflaute", seed=5)
        for a, b in zip(df.years, normal.years):
            assert a.sc_with_penalty >= b.sc_with_penalty * (1 - 1e-9)

    def test_seed_determinism(self, weekly, fleet_plan, normal):
        again = run_simulation(weekly, fleet_plan.mix, "normal", seed=5)
        assert [y.sc_with_penalty for y in again.years] == [y.sc_with_penalty for y in normal.years]
        other = run_simulation(weekly, fleet_plan.mix, "normal", seed=6)
        assert [y.outage_unit_hours for y in other.years] != [y.outage_unit_hours for y in normal.years]

    def test_worker_count_does_not_change_output(self, weekly, fleet_plan, normal):
        pooled = run_simulation(weekly, fleet_plan.mix, "normal", seed=5, workers=2)
        assert pooled.to_dict() == normal.to_dict()

    def test_unfavorable_weather_repeats_worst_year(self, weekly, fleet_plan):
        worst = worst_year_id(weekly)
        res = run_simulation(weekly, fleet_plan.mix, "unfavorable-weather", seed=5, worst_year=worst, years=["Y1", "Y2"])
        assert [y.year_id for y in res.years] == ["Y1", "Y2"]
        single = run_simulation(weekly, fleet_plan.mix, "normal", seed=5, years=[worst])
        assert res.years[0].sc_with_penalty == pytest.approx(single.years[0].sc_with_penalty, rel=1e-9)

    def test_summary_statistics(self, normal):
        costs = np.array([y.cost for y in normal.years])
        assert normal.mean_cost == pytest.approx(costs.mean())
        assert normal.std_cost == pytest.approx(costs.std())
        assert normal.max_cost == costs.max()
        assert 0.0 <= normal.lol_frequency <= 1.0
        assert normal.mean_lol >= 0.0
        assert normal.mean_breakdown().total == pytest.approx(normal.mean_cost, rel=1e-6)

    def test_exports(self, normal, tmp_path):
        normal.to_json(tmp_path / "s.json")
        data = json.loads((tmp_path / "s.json").read_text())
        assert data["kind"] == "normal" and len(data["years"]) == len(normal.years)
        normal.to_csv(tmp_path / "s.csv")
        rows = list(csv.reader(open(tmp_path / "s.csv")))
        assert rows[0] == ["year", "sc", "lol_mwh", "lol_fraction"] and len(rows) == len(normal.years) + 1


class TestArguments:
    def test_unknown_kind(self, weekly, fleet_plan):
        with pytest.raises(InvalidParameterError, match="kind"):
            run_simulation(weekly, fleet_plan.mix, "heatwave", seed=1)

    def test_unfavorable_needs_year(self, weekly, fleet_plan):
        with pytest.raises(InvalidParameterError):
            run_simulation(weekly, fleet_plan.mix, "unfavorable-weather", seed=1)

    def test_empty_years(self, weekly, fleet_plan):
        with pytest.raises(InvalidParameterError):
            run_simulation(weekly, fleet_plan.mix, "normal", seed=1, years=[])


class TestNuclearUnits:
    def test_whole_units(self):
        assert nuclear_units(_nuc(2000.0), 1000.0) == (2, 1000.0)

    def test_fractional_fleet(self):
        n, size = nuclear_units(_nuc(2500.0), 1000.0)
        assert n == 3 and size == pytest.approx(2500.0 / 3)

    def test_no_fleet(self):
        assert nuclear_units(_nuc(0.0), 1000.0) == (0, 1000.0)

    def test_noise_does_not_add_unit(self):
        assert nuclear_units(_nuc(2000.0 + 1e-7), 1000.0)[0] == 2


def _nuc(mw):
    cap = np.zeros((1, 7))
    cap[0, T_IDX["N"]] = mw
    return CapacityMix(cap, np.zeros(0))


@pytest.mark.parametrize("det,sto,vss", [(52301, 52205, 96), (51309, 51254, 55)])
def test_value_of_stochastic_solution(det, sto, vss):
    assert value_of_stochastic_solution(det, sto) == vss


@pytest.mark.parametrize("hi,lo,absolute,relative", [(52490, 52186, 304, 304 / 52186), (110, 100, 10, 0.1), (5, 5, 0, 0)])
def test_price_of_robustness(hi, lo, absolute, relative):
    a, r = price_of_robustness(hi, lo)
    assert a == absolute and r == pytest.approx(relative, rel=1e-12)
    if hi == 52490:
        assert r == pytest.approx(0.0058, abs=5e-5)
