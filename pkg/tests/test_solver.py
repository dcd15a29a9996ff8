import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_scenario
from fleetbalance.milp import BuildMode, build_ilp1, build_ilp2, violated_rows
from fleetbalance.scenario import Relaxation, random_scenario, stock_counts, with_bounds
from fleetbalance.solver import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    PlanError,
    extract_plan,
    plan_violations,
    solve,
    solve_lp_relaxation,
)
from fleetbalance.solver.bnb import branch_and_bound
from fleetbalance.solver.presolve import aggregate


def _checked(s, model):
    """Solve, then assert the result and plan invariants."""
    res = solve(model)
    if res.status != OPTIMAL:
        return res, None
    assert res.proof_gap <= 1e-6 * max(1.0, abs(res.objective))
    assert violated_rows(model, res.assignment) == []
    binary = np.array([v.kind == "binary" for v in model.variables])
    x = res.assignment[binary]
    assert np.all(np.minimum(np.abs(x), np.abs(x - 1)) <= 1e-6)
    plan = extract_plan(res, model, s)
    assert plan_violations(plan, s) == []
    assert plan.total_cost == pytest.approx(res.objective, abs=1e-9)
    return res, plan


def test_scenario1_staff_only(scenario1):
    res, plan = _checked(scenario1, build_ilp1(scenario1))
    assert res.objective == pytest.approx(34.0, abs=1e-6)
    assert plan.final_stocks == (17, 10, 5, 5, 5, 18)
    assert [m.vehicle for m in plan.moves if (m.origin, m.destination) == (6, 4)] == [60]


def test_scenario1_with_incentives(scenario1):
    res, plan = _checked(scenario1, build_ilp2(scenario1, (1, 1, 2)))
    assert res.objective == pytest.approx(26.0, abs=1e-6)
    assert plan.incentive_paid == pytest.approx(20.0)
    assert plan.staff_cost == pytest.approx(6.0)
    got = sorted((m.origin, m.destination, m.level) for m in plan.moves)
    assert got == sorted([(2, 5, 1), (2, 3, 2), (2, 3, 3), (2, 3, 3), (6, 4, None), (1, 5, None)])


def test_scenario2_staff_only_with_van(scenario2):
    res, plan = _checked(scenario2, build_ilp1(scenario2))
    assert res.objective == pytest.approx(25.0, abs=1e-6)


def test_unreachable_station_is_infeasible(scenario1):
    # nobody can reach S3 any more, and it holds 2 < 5 vehicles
    d = scenario1.distances
    vehicles = tuple(
        v if v.station == 3 else replace(v, autonomy_km=min(v.autonomy_km, d[v.station - 1][2] - 1))
        for v in scenario1.vehicles
    )
    s = replace(scenario1, vehicles=vehicles)
    assert solve(build_ilp1(s)).status == INFEASIBLE
    assert solve(build_ilp1(s), presolve=False).status == INFEASIBLE


def test_relaxation_bound(scenario1):
    rel = solve_lp_relaxation(build_ilp1(scenario1))
    assert rel.status == OPTIMAL
    assert rel.lower_bound <= 34.0 + 1e-9
    # staff-only rows form a transportation structure, so the bound is tight
    assert rel.lower_bound == pytest.approx(34.0, abs=1e-9)


def test_relaxation_with_everything_fixed_to_zero(scenario1):
    balanced = with_bounds(scenario1, [(0, 20)] * 6)
    m = build_ilp1(balanced)
    fix = {v.name: 0.0 for v in m.variables if v.name.startswith("x_")}
    rel = solve_lp_relaxation(m, fix)
    assert rel.status == OPTIMAL and rel.lower_bound == 0.0


def test_relaxation_fixing_forces_a_move(scenario1):
    m = build_ilp1(scenario1)
    rel = solve_lp_relaxation(m, {"x_1_4_1": 1.0})
    assert rel.lower_bound >= 34.0 - 1e-9
    assert rel.assignment[m.column("x_1_4_1")] == 1.0


def test_caps_zero_equals_staff_only(scenario1):
    assert solve(build_ilp2(scenario1, (0, 0, 0))).objective == pytest.approx(34.0)


@pytest.mark.parametrize("mode", list(BuildMode))
def test_determinism(scenario1, mode):
    m = build_ilp2(scenario1, (1, 1, 2), mode)
    a, b = solve(m), solve(m)
    assert np.array_equal(a.assignment, b.assignment)
    if mode is BuildMode.PHYSICAL:
        assert extract_plan(a, m, scenario1) == extract_plan(b, m, scenario1)


def test_faithful_mode_can_double_book(scenario1):
    # faithful-mode rows let EV1 serve S1->S4 and S1->S5 at once
    m = build_ilp1(scenario1, "faithful")
    res = solve(m)
    assert res.objective == pytest.approx(31.0)
    with pytest.raises(PlanError, match="station 1"):
        extract_plan(res, m, scenario1)


def test_faithful_counterexample_two_destinations():
    # one vehicle with 10 km, one with 1 km; two stations 5 km away each need one
    s = make_scenario(
        [(1, 0, 2), (2, 1, 1), (3, 1, 1)],
        [(1, 1, 10), (2, 1, 1)],
        [[0, 5, 5], [5, 0, 9], [5, 9, 0]],
    )
    assert solve(build_ilp1(s, "faithful")).objective == pytest.approx(10.0)
    assert solve(build_ilp1(s, "physical")).status == INFEASIBLE


def _instances(count, seed, n_max=4, k_max=12):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        s = random_scenario(
            rng,
            int(rng.integers(2, n_max + 1)),
            int(rng.integers(1, k_max + 1)),
            relaxation=Relaxation(rng.choice(["none", "staff-van"])),
        )
        if solve(build_ilp1(s)).status == OPTIMAL:
            out.append((s, tuple(int(c) for c in rng.integers(0, 3, size=len(s.levels)))))
    return out


@pytest.mark.parametrize("s,caps", _instances(25, 11))
def test_aggregated_matches_disaggregated(s, caps):
    for m in (build_ilp1(s), build_ilp2(s, caps)):
        a, b = solve(m), solve(m, presolve=False)
        assert a.status == b.status
        assert a.objective == pytest.approx(b.objective, abs=1e-9)


@pytest.mark.parametrize("s,caps", _instances(40, 5))
def test_order_properties(s, caps):
    rc, _ = _checked(s, build_ilp1(s))
    rci, _ = _checked(s, build_ilp2(s, caps))
    assert rci.objective <= rc.objective + 1e-9
    bigger = tuple(c + 1 for c in caps)
    assert solve(build_ilp2(s, bigger)).objective <= rci.objective + 1e-9
    assert solve(build_ilp2(s, (0,) * len(caps))).objective == pytest.approx(rc.objective, abs=1e-9)
    for mode_model in (build_ilp1(s, "faithful"), build_ilp2(s, caps, "faithful")):
        loose = solve(mode_model)
        assert loose.status == OPTIMAL
    assert solve(build_ilp1(s, "faithful")).objective <= rc.objective + 1e-9
    assert solve(build_ilp2(s, caps, "faithful")).objective <= rci.objective + 1e-9


@pytest.mark.parametrize("s,caps", _instances(15, 23))
@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_cost_scaling(s, caps, lam):
    scaled = replace(s, cost_per_km=s.cost_per_km * lam)
    for build in (lambda x: build_ilp1(x), lambda x: build_ilp2(x, caps)):
        base, other = solve(build(s)), solve(build(scaled))
        assert other.objective == pytest.approx(lam * base.objective, rel=1e-9, abs=1e-12)


def test_presolve_merges_vehicles(scenario1):
    agg = aggregate(build_ilp1(scenario1))
    assert agg.arrays.c.shape[0] < 100
    assert not agg.infeasible


# -- branch and bound on plain integer programs ------------------------------


def _enumerate(c, A, senses, b, ub):
    best = None
    for point in itertools.product(*(range(int(u) + 1) for u in ub)):
        x = np.array(point, dtype=float)
        act = A @ x
        if np.all(np.where(senses == -1, act <= b + 1e-9, np.where(senses == 1, act >= b - 1e-9, np.abs(act - b) <= 1e-9))):
            val = float(c @ x)
            best = val if best is None else min(best, val)
    return best


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 4))
def test_branch_and_bound_matches_enumeration(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.integers(-4, 5, size=(m, n)).astype(float)
    b = rng.integers(-3, 8, size=m).astype(float)
    senses = rng.integers(-1, 2, size=m)
    c = rng.integers(-6, 7, size=n).astype(float)
    ub = rng.integers(1, 4, size=n).astype(float)
    res = branch_and_bound(c, A, senses, b, np.zeros(n), ub, np.ones(n, dtype=bool))
    best = _enumerate(c, A, senses, b, ub)
    if best is None:
        assert res.status == "infeasible"
    else:
        assert res.status == "optimal"
        assert res.objective == pytest.approx(best, abs=1e-9)
        assert np.array_equal(res.x, np.round(res.x))


def test_node_budget_reports_iteration_limit():
    # LP optimum is fractional (x1 + x2 = 1.5), so the root alone cannot prove optimality
    c = np.array([-1.0, -1.0])
    A = np.array([[2.0, 2.0]])
    args = (c, A, np.array([-1]), np.array([3.0]), np.zeros(2), np.ones(2), np.ones(2, dtype=bool))
    capped = branch_and_bound(*args, node_limit=1)
    assert capped.status == ITERATION_LIMIT
    full = branch_and_bound(*args)
    assert full.status == OPTIMAL and full.objective == -1.0 and full.nodes > 1


def test_stock_conservation_in_plans(scenario2):
    _, plan = _checked(scenario2, build_ilp2(scenario2, (1, 1, 2)))
    assert sum(plan.final_stocks) == sum(stock_counts(scenario2))
