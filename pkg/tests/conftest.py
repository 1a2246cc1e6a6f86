import pytest
from hypothesis import HealthCheck, settings

from diakit import newscast

settings.register_profile(
    "ci", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def newscast_sources():
    return newscast.fixture_sources()


@pytest.fixture(scope="session")
def newscast_spec():
    return newscast.load_spec()
