from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetbalance.feasibility import (
    Executor,
    arc_caps,
    battery_feasible,
    can_serve,
    feasibility_matrix,
    feasible_count,
    station_diagnostics,
)
from conftest import make_scenario
from fleetbalance.milp import ARC_CAP, build_ilp2
from fleetbalance.scenario import Relaxation, VehicleClass, random_scenario, stock_counts


def test_boundary_equality_is_feasible(scenario1):
    assert battery_feasible(1, 4, scenario1)  # autonomy 4, distance 4


def test_short_range_is_infeasible(scenario1):
    assert not battery_feasible(60, 5, scenario1)  # autonomy 2, distance 4


def test_own_station_always_feasible(scenario1):
    assert all(battery_feasible(v.id, v.station, scenario1) for v in scenario1.vehicles)


def test_unknown_ids_rejected(scenario1):
    with pytest.raises(KeyError):
        battery_feasible(999, 1, scenario1)
    with pytest.raises(KeyError):
        battery_feasible(1, 99, scenario1)


@pytest.mark.parametrize(
    "origin,dest,expected",
    [(2, 3, 4), (6, 5, 0), (1, 5, 1), (6, 4, 1)],
)
def test_feasible_count_scenario1(scenario1, origin, dest, expected):
    assert feasible_count(origin, dest, Executor.STAFF, scenario1) == expected
    assert feasible_count(origin, dest, Executor.USER, scenario1) == expected


def test_van_relaxation_lifts_staff_cap(scenario2):
    assert feasible_count(6, 5, Executor.STAFF, scenario2) == 19
    assert feasible_count(6, 5, Executor.USER, scenario2) == 0


def test_feasible_count_rejects_same_station(scenario1):
    with pytest.raises(ValueError):
        feasible_count(2, 2, "staff", scenario1)


def test_matrix_scenario1_executors_agree(scenario1):
    table = feasibility_matrix(scenario1)
    assert np.array_equal(table.per_arc[Executor.STAFF], table.per_arc[Executor.USER])


def test_matrix_scenario2_s6_to_s3(scenario2):
    table = feasibility_matrix(scenario2)
    assert table.arc(5, 2, Executor.STAFF) == 19
    assert table.arc(5, 2, Executor.USER) == 0


def test_van_portable_only_for_small_classes(scenario2):
    cars = replace(scenario2, vehicles=tuple(replace(v, vehicle_class=VehicleClass.MOPED) for v in scenario2.vehicles))
    assert feasible_count(6, 5, Executor.STAFF, cars) == 0


def test_can_serve_uses_executor(scenario2):
    assert can_serve(scenario2, 60, 4, Executor.STAFF)
    assert not can_serve(scenario2, 60, 4, Executor.USER)


def _random(seed, relaxation=Relaxation.NONE):
    rng = np.random.default_rng(seed)
    return random_scenario(rng, int(rng.integers(2, 6)), int(rng.integers(0, 25)), relaxation=relaxation)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(Relaxation)))
def test_per_arc_is_recount_of_per_vehicle(seed, relaxation):
    s = _random(seed, relaxation)
    table = feasibility_matrix(s)
    stock = stock_counts(s)
    for ex in Executor:
        for i in range(s.n_stations):
            for j in range(s.n_stations):
                recount = sum(
                    bool(table.per_vehicle[ex][k, j])
                    for k, v in enumerate(s.vehicles)
                    if s.station_index(v.station) == i
                )
                assert table.per_arc[ex][i, j] == recount
                assert 0 <= recount <= stock[i]
                if i != j:
                    assert recount == feasible_count(s.stations[i].id, s.stations[j].id, ex, s)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 24), st.floats(0, 20))
def test_more_autonomy_never_lowers_counts(seed, k, extra):
    s = _random(seed)
    if not s.vehicles:
        return
    k %= s.n_vehicles
    boosted = replace(
        s,
        vehicles=tuple(replace(v, autonomy_km=v.autonomy_km + extra) if n == k else v for n, v in enumerate(s.vehicles)),
    )
    for ex in Executor:
        assert np.all(arc_caps(boosted, ex) >= arc_caps(s, ex))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_staff_van_fleet_caps_equal_stock(seed):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, 4, 15, vehicle_class=VehicleClass.KICK_SCOOTER, relaxation=Relaxation.STAFF_VAN)
    caps = arc_caps(s, Executor.STAFF)
    stock = stock_counts(s)
    for i in range(4):
        for j in range(4):
            assert caps[i, j] == (0 if i == j else stock[i])


def test_user_caps_do_not_depend_on_level(scenario1):
    # one user table serves every level; levels change only the price
    m = build_ilp2(scenario1, (1, 1, 2))
    rhs = {}
    for con in m.constraints:
        if con.tag == ARC_CAP and not con.name.endswith("_4"):
            arc = con.name.rsplit("_", 1)[0]
            rhs.setdefault(arc, set()).add(con.rhs)
    assert all(len(v) == 1 for v in rhs.values())


def test_diagnostics_flag_unreachable_station():
    # station 2 needs 2 vehicles but nothing can reach it
    s = make_scenario([(1, 0, 3), (2, 2, 3)], [(1, 1, 1), (2, 1, 1), (3, 1, 1)], [[0, 5], [5, 0]])
    diag = station_diagnostics(s)
    assert diag[1]["deficit"] == 2
    assert diag[0]["deficit"] == 0
