import pytest

from cityfix import build_city
from ridelink.ptnet import NetworkPlanner, station_lexicon


@pytest.fixture(scope="session")
def city_net():
    """Small fixed network: metro line M1 (west-east), M2 (north-south, hub at
    Cedar), and one bus route south of the metro corridor."""
    return build_city()


@pytest.fixture(scope="session")
def city_planner(city_net):
    return NetworkPlanner(city_net)


@pytest.fixture(scope="session")
def city_lexicon(city_net):
    return station_lexicon(city_net)
