import numpy as np
import pytest

from caprobust.case import aggregate_to_steps, generate_synthetic_case, mini_case
from caprobust.outages import MonthlyOutageData


@pytest.fixture(scope="session")
def mini():
    return aggregate_to_steps(mini_case(), 24)


@pytest.fixture(scope="session")
def weekly():
    """Three-year synthetic case at weekly steps; fast enough for per-test solves."""
    return aggregate_to_steps(generate_synthetic_case(seed=3, n_regions=3, n_years=3), 168)


@pytest.fixture
def outage_data():
    rng = np.random.default_rng(5)
    hours = np.array([744, 672, 744, 720, 744, 720, 744, 744, 720, 744, 720, 744])
    data = np.where(rng.random((20, 12)) < 0.3, rng.integers(1, 200, (20, 12)), 0)
    data[0, 0] = hours[0]
    return MonthlyOutageData(np.minimum(data, hours))


_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, text = mark.args
    prev = _CRITERIA.get(number, ("PASS", text))[0]
    status = "FAIL" if rep.failed or prev == "FAIL" else "PASS"
    _CRITERIA[number] = (status, text)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, text = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {text}")
