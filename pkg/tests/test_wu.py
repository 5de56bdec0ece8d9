import json
from dataclasses import replace

import numpy as np
import pytest

from caprobust.case import TECHS, Scalars, aggregate_to_steps, capital_recovery_factor, default_technologies
from caprobust.errors import InvalidParameterError, ModelBuildError, SolverError
from caprobust.wu import T_IDX, audit_plan, build_dispatch, build_wu, link_ids, mix_from_dict, solve_wu

from .helpers import flat_case

AUDIT_TOL = 1e-4


def gas_yearly_capacity_cost():
    g = default_technologies()["G"]
    return g.inv_cost * capital_recovery_factor(0.05, g.lifetime) + g.fixed_cost


def gas_energy_cost():
    g = default_technologies()["G"]
    return g.fuel_cost / g.efficiency + g.var_cost + 150.0 * g.emission_factor / g.efficiency


def gas_only_cost(load_mw):
    return load_mw * gas_yearly_capacity_cost() + 8760 * load_mw * gas_energy_cost()


@pytest.fixture(scope="module")
def gas_only():
    return aggregate_to_steps(flat_case(load=1000.0, caps={"G": np.inf}), 24)


def test_gas_only_sizes_to_load(gas_only):
    plan = solve_wu(gas_only)
    assert plan.capacity[0, T_IDX["G"]] == pytest.approx(1000.0, rel=1e-7)
    assert plan.dispatch.shed.max() == pytest.approx(0.0, abs=1e-6)
    assert plan.sc == pytest.approx(gas_only_cost(1000.0), rel=1e-7)


def test_no_shedding_allowed():
    st = aggregate_to_steps(flat_case(caps={"G": 600.0, "W": 2000.0}, scalars=Scalars(ts=24, sr=0.0)), 24)
    plan = solve_wu(st)
    assert np.all(plan.dispatch.shed == 0)


def test_zero_maintenance_share():
    st = aggregate_to_steps(flat_case(caps={"N": np.inf, "G": np.inf}, scalars=Scalars(ts=24, beta=0.0)), 24)
    plan = solve_wu(st)
    assert plan.dispatch.planned.sum() == pytest.approx(0.0, abs=1e-6)


def test_planned_total_identity():
    st = aggregate_to_steps(flat_case(caps={"N": np.inf, "G": np.inf}), 24)
    plan = solve_wu(st)
    nuc = plan.capacity[0, T_IDX["N"]]
    assert nuc > 0
    assert plan.dispatch.planned.sum() == pytest.approx(0.15 * 365 * 24 * nuc, rel=1e-7)


@pytest.fixture(scope="module")
def plan(weekly):
    return solve_wu(weekly)


class TestSyntheticPlans:
    def test_capacity_bounds(self, plan, weekly):
        cmax = weekly.case.max_capacity()
        assert np.all(plan.capacity >= -1e-7)
        assert np.all(plan.capacity <= cmax + 1e-6)

    def test_battery_sizing(self, plan, weekly):
        assert np.all(plan.capacity[:, T_IDX["B"]] >= weekly.scalars.dt * plan.capacity[:, T_IDX["I"]] - 1e-6)

    def test_cost_identity(self, plan):
        assert plan.breakdown.total == pytest.approx(plan.sc, rel=1e-6)

    def test_audit(self, plan, weekly):
        res = audit_plan(weekly, plan)
        assert max(res.values()) <= AUDIT_TOL, res

    def test_cyclic_storage(self, plan, weekly):
        rl = plan.dispatch.reservoir
        cap = max(1.0, max(r.hydro_reservoir_cap for r in weekly.case.regions))
        assert audit_plan(weekly, plan)["reservoir_cyclic"] * weekly.ts <= 1e-6 * cap
        assert rl.shape[-1] == weekly.n_steps

    def test_duplicated_scenario(self, plan, weekly):
        s = weekly.series[0]
        single = solve_wu(weekly, [s.with_probability(1.0)])
        double = solve_wu(weekly, [s.with_probability(0.5), s.with_probability(0.5)])
        assert double.sc == pytest.approx(single.sc, rel=1e-6)
        np.testing.assert_allclose(double.capacity.sum(axis=0), single.capacity.sum(axis=0), rtol=1e-4, atol=1e-2)

    def test_zero_probability_scenario(self, plan, weekly):
        scen = [s for s in weekly.series]
        extra = scen[0].with_probability(0.0)
        extra = replace(extra, id="ghost", load=extra.load * 1.1)
        again = solve_wu(weekly, scen + [extra])
        assert again.sc == pytest.approx(plan.sc, rel=1e-6)

    def test_json_round_trip(self, plan, weekly, tmp_path):
        plan.to_json(tmp_path / "p.json")
        data = json.loads((tmp_path / "p.json").read_text())
        assert set(data["breakdown"]) >= {"ic", "fc", "oc", "emissions_cost", "shed_cost"}
        mix = mix_from_dict(data, weekly.case.region_ids, link_ids(weekly))
        np.testing.assert_array_equal(mix.capacity, plan.capacity)
        np.testing.assert_array_equal(mix.trans, plan.trans_capacity)

    def test_dispatch_csv(self, plan, tmp_path):
        plan.dispatch_csv(tmp_path / "d.csv")
        lines = (tmp_path / "d.csv").read_text().splitlines()
        assert lines[0] == "scenario,step,region,quantity,value"
        assert len(lines) > 1

    def test_fixed_fleet(self, weekly):
        plan = solve_wu(weekly, fixed_n=2)
        assert plan.capacity[:, T_IDX["N"]].sum() == pytest.approx(2000.0, rel=1e-8)
        assert plan.n_equivalent == pytest.approx(2.0)


def test_probabilities_must_sum_to_one(weekly):
    with pytest.raises(InvalidParameterError):
        solve_wu(weekly, [weekly.series[0].with_probability(0.5)])


def test_fleet_exceeds_potential():
    st = aggregate_to_steps(flat_case(caps={"N": 1500.0, "G": np.inf}), 24)
    with pytest.raises(InvalidParameterError):
        build_wu(st, fixed_n=2)


def test_dimension_error_names_series(weekly):
    bad = replace(weekly.series[0], id="Ybad", cf_wind=weekly.series[0].cf_wind[:, :10])
    with pytest.raises(ModelBuildError, match="Ybad"):
        build_dispatch(weekly, [bad.with_probability(1.0)])


def test_infeasible_reports_groups():
    st = aggregate_to_steps(flat_case(caps={}, scalars=Scalars(ts=24, sr=0.0)), 24)
    with pytest.raises(SolverError) as info:
        solve_wu(st)
    assert info.value.status == "infeasible"
    assert "balance" in info.value.diagnostics


def test_mini_case_regression(mini):
    # recorded from the first build with the dual simplex backend
    a = solve_wu(mini)
    b = solve_wu(mini)
    assert a.sc == b.sc
    assert a.sc == pytest.approx(2612001463.11, rel=1e-6)
    assert max(audit_plan(mini, a).values()) <= AUDIT_TOL


def test_tech_order():
    assert TECHS.index("B") == T_IDX["B"]
