import pytest

from coarsewage import simulate


@pytest.fixture(scope="session")
def baseline():
    """Baseline cohort (about 2e5 hires) and its label summary."""
    return simulate.simulate_hires(simulate.baseline_config(seed=1))


@pytest.fixture(scope="session")
def frictionless():
    return simulate.simulate_hires(simulate.frictionless_config(seed=2))


@pytest.fixture(scope="session")
def mw_schedule():
    return simulate.baseline_config().min_wage_centavos()


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
