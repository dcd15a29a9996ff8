from __future__ import annotations

import pytest

from fleetbalance.scenario import IncentiveLevel, Relaxation, Scenario, Station, Vehicle, VehicleClass, bundled_scenario


@pytest.fixture(scope="session")
def scenario1() -> Scenario:
    return bundled_scenario("scenario1")


@pytest.fixture(scope="session")
def scenario2() -> Scenario:
    return bundled_scenario("scenario2")


def make_scenario(
    stations,
    vehicles,
    distances,
    *,
    cost=1.0,
    relaxation=Relaxation.NONE,
    population=0,
    levels=((0.5, 0.0), (0.7, 0.0), (0.9, 0.0)),
    default_bounds=(0, None),
) -> Scenario:
    """stations: [(id, n_min, n_max)], vehicles: [(id, station, autonomy[, class])]."""
    vs = []
    for v in vehicles:
        cls = VehicleClass(v[3]) if len(v) > 3 else VehicleClass.CAR
        vs.append(Vehicle(v[0], v[1], float(v[2]), cls))
    lo, hi = default_bounds
    return Scenario(
        stations=tuple(Station(*st) for st in stations),
        vehicles=tuple(vs),
        distances=tuple(tuple(float(x) for x in row) for row in distances),
        cost_per_km=cost,
        default_n_min=lo,
        default_n_max=len(vs) if hi is None else hi,
        user_population=population,
        levels=tuple(IncentiveLevel(u + 1, r, a) for u, (r, a) in enumerate(levels)),
        relaxation=relaxation,
        name="test",
    )


@pytest.fixture
def two_station():
    """Two stations 3 km apart, two vehicles at station 1, bounds [1, 2]."""
    return make_scenario([(1, 1, 2), (2, 1, 2)], [(1, 1, 5), (2, 1, 5)], [[0, 3], [3, 0]])


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
