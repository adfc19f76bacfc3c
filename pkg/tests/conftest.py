import pytest

from rentledger import ManualClock, new_platform
from rentledger import rental

USERS = ("Alice", "Bob", "Carol", "Dave")
ARBS = ("Arb1", "Arb2", "Arb3", "Arb4")


@pytest.fixture
def clock():
    return ManualClock("2024-05-01T09:00:00Z")


@pytest.fixture
def platform(clock):
    return new_platform(clock=clock, users=USERS, arbitrators=ARBS, initial_date="2024-05-01")


@pytest.fixture
def engine(platform):
    return platform.engine


def make_lease(platform, tenant="Alice", landlord="Bob", house_id="h1",
               dates=("2024-05-25", "2024-06-25"), n_arb=3, rent=80000,
               begin="2024-05-01"):
    """Full propose -> accept -> approve chain; returns the lease cid."""
    engine = platform.engine
    house = rental.House(house_id, f"Street {house_id}", landlord)
    terms = rental.LeaseTerms(rent, begin, tuple(dates), n_arb)
    prop = rental.submit_proposal(engine, tenant, landlord, platform.operator, house, terms)
    req = rental.accept(engine, landlord, prop)
    return rental.approve(engine, platform.operator, req)
