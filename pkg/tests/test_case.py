import functools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caprobust.case import (
    HOURS_PER_YEAR,
    MONTH_HOURS,
    Link,
    Region,
    Scalars,
    ScenarioSeries,
    aggregate_to_steps,
    apply_dunkelflaute,
    capital_recovery_factor,
    generate_synthetic_case,
    pick_scenarios,
    scenario_probabilities,
    select_scenarios,
    transmission_efficiency,
)
from caprobust.errors import DataValidationError, InvalidParameterError

from .helpers import flat_case


def annuity_oracle(i, n):
    # yearly payment that repays 1 unit over n years: 1 / sum of discount factors
    return 1.0 / sum((1 + i) ** -k for k in range(1, n + 1))


class TestCapitalRecovery:
    def test_forty_years(self):
        assert capital_recovery_factor(0.05, 40) == pytest.approx(0.058278, abs=1e-6)
        assert capital_recovery_factor(0.05, 40) == pytest.approx(annuity_oracle(0.05, 40), rel=1e-12)

    def test_single_year(self):
        assert capital_recovery_factor(0.05, 1) == pytest.approx(1.05, rel=1e-12)

    def test_eighty_years(self):
        assert capital_recovery_factor(0.05, 80) == pytest.approx(0.051030, abs=1e-6)

    @pytest.mark.parametrize("i,life", [(0.0, 10), (-0.1, 10), (0.05, 0.5)])
    def test_rejects_bad_inputs(self, i, life):
        with pytest.raises(InvalidParameterError):
            capital_recovery_factor(i, life)

    @given(st.floats(0.001, 0.3), st.integers(1, 99))
    def test_decreasing_in_lifetime(self, i, life):
        assert capital_recovery_factor(i, life + 1) < capital_recovery_factor(i, life)

    @given(st.floats(0.001, 0.3), st.integers(1, 100))
    def test_increasing_in_rate(self, i, life):
        assert capital_recovery_factor(i * 1.01, life) > capital_recovery_factor(i, life)


class TestTransmissionEfficiency:
    def test_one_thousand_km(self):
        assert transmission_efficiency(1000, 0.016) == pytest.approx(0.984, rel=1e-12)

    def test_two_thousand_km(self):
        assert transmission_efficiency(2000, 0.016) == pytest.approx(0.968256, abs=1e-6)

    def test_short_line(self):
        assert transmission_efficiency(0.0001, 0.016) == pytest.approx(1.0, abs=1e-5)

    def test_rejects_total_loss(self):
        with pytest.raises(InvalidParameterError):
            transmission_efficiency(100, 1.0)


class TestAggregation:
    def test_hourly_identity(self):
        case = generate_synthetic_case(2, 2, 1)
        st_ = aggregate_to_steps(case, 1)
        assert st_.n_steps == HOURS_PER_YEAR
        np.testing.assert_array_equal(st_.series[0].load, case.years[0].load)

    def test_seven_hour_steps(self):
        st_ = aggregate_to_steps(flat_case(), 7)
        assert st_.n_steps == 1251
        assert st_.series[0].load.shape == (1, 1251)
        assert st_.scalars.ts == 7

    @pytest.mark.parametrize("ts", [1, 5, 24, 100, 8760])
    def test_constant_load(self, ts):
        st_ = aggregate_to_steps(flat_case(load=10.0), ts)
        assert np.all(st_.series[0].load == 10.0)

    def test_rejects_oversized_step(self):
        with pytest.raises(InvalidParameterError):
            aggregate_to_steps(flat_case(), 8761)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 2000))
    def test_preserves_mean(self, ts):
        case = _random_case()
        st_ = aggregate_to_steps(case, ts)
        covered = st_.n_steps * ts
        for a, b in ((st_.series[0].load, case.years[0].load), (st_.series[0].cf_wind, case.years[0].cf_wind)):
            assert a.mean() == pytest.approx(b[:, :covered].mean(), rel=1e-9, abs=1e-12)
        assert np.all((st_.series[0].cf_solar >= 0) & (st_.series[0].cf_solar <= 1))

    def test_first_hours(self):
        st_ = aggregate_to_steps(flat_case(), 7)
        assert st_.first_hours[:3].tolist() == [0, 7, 14]


@functools.lru_cache(maxsize=1)
def _random_case():
    return generate_synthetic_case(9, 2, 1)


@pytest.fixture(scope="module")
def year():
    return generate_synthetic_case(4, 2, 1).years[0]


class TestDunkelflaute:
    def test_window_edges(self, year):
        out = apply_dunkelflaute(year, 32, 14, 0.4)
        # 1-based hour 745 is index 744; 1-based hour 744 is index 743
        assert np.array_equal(out.cf_wind[:, 744], 0.4 * year.cf_wind[:, 744])
        assert np.array_equal(out.cf_wind[:, 743], year.cf_wind[:, 743])
        assert np.array_equal(out.cf_solar[:, 1079], 0.4 * year.cf_solar[:, 1079])
        assert np.array_equal(out.cf_solar[:, 1080], year.cf_solar[:, 1080])

    def test_load_untouched(self, year):
        out = apply_dunkelflaute(year, 32, 14, 0.4)
        assert out.load is year.load or np.array_equal(out.load, year.load)
        assert np.array_equal(out.inflow, year.inflow)

    def test_unit_intensity_is_identity(self, year):
        out = apply_dunkelflaute(year, 32, 14, 1.0)
        assert np.array_equal(out.cf_wind, year.cf_wind)
        assert np.array_equal(out.cf_solar, year.cf_solar)

    def test_zero_intensity(self, year):
        out = apply_dunkelflaute(year, 32, 14, 0.0)
        assert np.all(out.cf_wind[:, 744:1080] == 0)

    def test_composes_multiplicatively(self, year):
        twice = apply_dunkelflaute(apply_dunkelflaute(year, 10, 5, 0.5), 10, 5, 0.5)
        once = apply_dunkelflaute(year, 10, 5, 0.25)
        assert np.array_equal(twice.cf_wind, once.cf_wind)

    @pytest.mark.parametrize("args", [(0, 14, 0.4), (360, 10, 0.4), (32, 14, 1.5), (32, 0, 0.4)])
    def test_rejects_bad_window(self, year, args):
        with pytest.raises(InvalidParameterError):
            apply_dunkelflaute(year, *args)


class TestScenarioPick:
    def test_mean_closest(self):
        assert pick_scenarios([100, 110, 130]) == (0, 1, 2)

    def test_ties_go_to_lowest_index(self):
        assert pick_scenarios([5, 5, 5, 5]) == (0, 0, 0)

    def test_needs_three(self):
        with pytest.raises(InvalidParameterError):
            pick_scenarios([1, 2])

    @given(st.lists(st.integers(-10**6, 10**6), min_size=3, max_size=40, unique=True))
    def test_distinct_values_distinct_picks(self, costs):
        fav, avg, unfav = pick_scenarios(costs)
        assert len({fav, avg, unfav}) == 3
        assert costs[fav] == min(costs) and costs[unfav] == max(costs)

    def test_probabilities(self):
        assert scenario_probabilities(3) == [0.2, 0.4, 0.4]
        assert sum(scenario_probabilities(5)) == pytest.approx(1.0)

    def test_select_is_stable(self, weekly):
        assert select_scenarios(weekly) == select_scenarios(weekly) == select_scenarios(weekly, workers=2)
        assert len(set(select_scenarios(weekly))) == 3


class TestSyntheticCase:
    def test_deterministic(self):
        a, b = generate_synthetic_case(1, 3, 2), generate_synthetic_case(1, 3, 2)
        for ya, yb in zip(a.years, b.years):
            for q in ("load", "cf_wind", "cf_solar", "inflow"):
                assert np.array_equal(getattr(ya, q), getattr(yb, q))
        assert np.array_equal(a.outage_data.samples, b.outage_data.samples)

    def test_invariants(self):
        case = generate_synthetic_case(1, 3, 2)
        assert sum(y.probability for y in case.years) == pytest.approx(1.0, abs=1e-9)
        for y in case.years:
            assert np.all((y.cf_wind >= 0) & (y.cf_wind <= 1))
            assert np.all((y.cf_solar >= 0) & (y.cf_solar <= 1))
            assert np.all(y.load >= 0)
        assert len(case.links) >= len(case.regions) - 1

    def test_many_distinct_years(self):
        case = generate_synthetic_case(1, 3, 41)
        loads = [y.load.tobytes() for y in case.years]
        winds = [y.cf_wind.tobytes() for y in case.years]
        assert len(set(loads)) == 41 and len(set(winds)) == 41

    def test_outage_months_fit(self):
        data = generate_synthetic_case(1, 2, 1).outage_data.samples
        assert np.all(data <= np.array(MONTH_HOURS))

    def test_rejects_single_region(self):
        with pytest.raises(InvalidParameterError):
            generate_synthetic_case(1, 1, 1)


class TestValidation:
    def test_scalars(self):
        with pytest.raises(DataValidationError):
            Scalars(ts=0)
        with pytest.raises(DataValidationError):
            Scalars(beta=1.0)
        with pytest.raises(DataValidationError):
            Scalars(unit_nuclear=0)

    def test_link(self):
        with pytest.raises(DataValidationError):
            Link("A", "A", 10)
        with pytest.raises(DataValidationError):
            Link("A", "B", 0)

    def test_region_rejects_negative(self):
        with pytest.raises(DataValidationError):
            Region("A", {"G": -1})

    def test_series_rejects_bad_cf(self):
        z = np.zeros((1, 24))
        with pytest.raises(DataValidationError):
            ScenarioSeries("x", 1.0, z, z + 1.5, z, z)

    def test_case_rejects_unordered_link(self):
        with pytest.raises(DataValidationError):
            flat_case(n_regions=2, links=[("R2", "R1", 100.0)])

    def test_case_rejects_wrong_length(self):
        case = flat_case()
        y = case.years[0]
        short = ScenarioSeries("s", 1.0, y.load[:, :100], y.cf_wind[:, :100], y.cf_solar[:, :100], y.inflow[:, :100])
        with pytest.raises(DataValidationError, match="series s"):
            type(case)(case.regions, case.links, case.technologies, case.scalars, (short,))

    def test_unbounded_default(self):
        assert math.isinf(Region("A", {}).max_capacity["N"])
