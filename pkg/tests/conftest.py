import pytest
from hypothesis import HealthCheck, settings

from geolorenz.cantor import build_direct_cantor, build_theorem_cantor
from geolorenz.geo_model import GeoParams
from geolorenz.one_d import default_model, ulam_measure

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def model():
    return default_model()


@pytest.fixture(scope="session")
def geo():
    return GeoParams()


@pytest.fixture(scope="session")
def mu1024(model):
    return ulam_measure(model, 1024)


@pytest.fixture(scope="session")
def direct_spec(model):
    return build_direct_cantor(model, 1e-3, 4)


@pytest.fixture(scope="session")
def theorem_run(model, mu1024):
    return build_theorem_cantor(model, 2, m_cap=10, measure=mu1024)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICTS
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
