"""Turn an optimal assignment into a concrete relocation plan."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from fleetbalance.feasibility import Executor
from fleetbalance.milp import MilpModel
from fleetbalance.scenario import Relaxation, Scenario, Vehicle, stock_counts
from fleetbalance.solver.core import OPTIMAL, SolveResult


class PlanError(RuntimeError):
    pass


@dataclass(frozen=True)
class Move:
    vehicle: int
    origin: int  # station id
    destination: int  # station id
    level: int | None  # user incentive level, None for staff
    rate: float
    km: float
    cost: float

    @property
    def executor(self) -> str:
        return "staff" if self.level is None else f"level {self.level}"

    @property
    def by_user(self) -> bool:
        return self.level is not None

    def to_dict(self) -> dict:
        return {
            "vehicle": self.vehicle,
            "from": self.origin,
            "to": self.destination,
            "executor": self.executor,
            "km": round(self.km, 9),
            "cost": round(self.cost, 9),
        }


@dataclass(frozen=True)
class Plan:
    moves: tuple[Move, ...]
    total_cost: float
    incentive_paid: float
    staff_cost: float
    final_stocks: tuple[int, ...]

    def arc_multiset(self) -> Counter:
        return Counter((mv.origin, mv.destination) for mv in self.moves)

    def to_dict(self) -> dict:
        return {
            "moves": [mv.to_dict() for mv in self.moves],
            "total_cost": self.total_cost,
            "incentive_paid": self.incentive_paid,
            "staff_cost": self.staff_cost,
            "final_stocks": list(self.final_stocks),
        }


def make_plan(s: Scenario, moves: list[Move]) -> Plan:
    moves = sorted(moves, key=lambda mv: (mv.origin, mv.destination, mv.level is None, mv.level or 0, mv.vehicle))
    pos = {st.id: p for p, st in enumerate(s.stations)}
    stocks = list(stock_counts(s))
    for mv in moves:
        stocks[pos[mv.origin]] -= 1
        stocks[pos[mv.destination]] += 1
    incentive = sum(mv.cost for mv in moves if mv.by_user)
    staff = sum(mv.cost for mv in moves if not mv.by_user)
    return Plan(tuple(moves), incentive + staff, incentive, staff, tuple(stocks))


def _eligible(s: Scenario, v: Vehicle, i: int, j: int, executor: Executor) -> bool:
    if v.autonomy_km - s.distances[i][j] >= 0:
        return True
    return executor is Executor.STAFF and s.relaxation is Relaxation.STAFF_VAN and v.van_portable


def _match(units, vehicles, ok) -> list[int] | None:
    """Kuhn's augmenting paths; units and vehicles in fixed order."""
    owner: dict[int, int] = {}

    def augment(u: int, seen: set[int]) -> bool:
        for k in range(len(vehicles)):
            if k in seen or not ok(units[u], vehicles[k]):
                continue
            seen.add(k)
            if k not in owner or augment(owner[k], seen):
                owner[k] = u
                return True
        return False

    for u in range(len(units)):
        if not augment(u, set()):
            return None
    result = [-1] * len(units)
    for k, u in owner.items():
        result[u] = k
    return result


def assign_vehicles(s: Scenario, origin: int, units: list[tuple[int, Executor]]) -> list[Vehicle]:
    """Pick one vehicle per (destination, executor) unit leaving station position ``origin``.

    Units needing a charged vehicle go first, most distant first, each taking
    the smallest sufficient autonomy. Van-loadable staff units then prefer
    vehicles that could not drive the trip themselves.
    """
    fleet = sorted(s.vehicles_at(origin), key=lambda v: (v.autonomy_km, v.id))
    d = s.distances[origin]

    def relaxed(unit) -> bool:
        j, ex = unit
        return ex is Executor.STAFF and s.relaxation is Relaxation.STAFF_VAN

    order = sorted(range(len(units)), key=lambda n: (relaxed(units[n]), -d[units[n][0]], units[n][0], n))
    chosen: list[Vehicle | None] = [None] * len(units)
    taken: set[int] = set()
    greedy_ok = True
    for n in order:
        j, ex = units[n]
        pool = [v for v in fleet if v.id not in taken and _eligible(s, v, origin, j, ex)]
        if relaxed(units[n]):
            pool.sort(key=lambda v: (v.autonomy_km >= d[j], v.autonomy_km, v.id))
        if not pool:
            greedy_ok = False
            break
        chosen[n] = pool[0]
        taken.add(pool[0].id)
    if greedy_ok:
        return chosen  # type: ignore[return-value]

    ordered = [units[n] for n in order]
    result = _match(ordered, fleet, lambda unit, v: _eligible(s, v, origin, unit[0], unit[1]))
    if result is None:
        raise PlanError(f"no vehicle assignment exists for the moves leaving station {s.stations[origin].id}")
    out: list[Vehicle] = [None] * len(units)  # type: ignore[list-item]
    for n, k in zip(order, result):
        out[n] = fleet[k]
    return out


def extract_plan(result: SolveResult, model: MilpModel, s: Scenario) -> Plan:
    if result.status != OPTIMAL:
        raise PlanError(f"cannot extract a plan from a {result.status} result")
    meta = model.metadata
    levels = meta["levels"]
    x = result.assignment
    flows: Counter = Counter()
    for (i, j, k, u), col in meta["x_index"].items():
        if i != j:
            val = int(round(x[col]))
            if val:
                flows[(i, j, u)] += val

    moves: list[Move] = []
    c = s.cost_per_km
    for i in range(s.n_stations):
        units = []
        keys = []
        for (oi, j, u), cnt in sorted(flows.items()):
            if oi == i:
                units.extend([(j, levels[u].executor)] * cnt)
                keys.extend([(j, u)] * cnt)
        if not units:
            continue
        vehicles = assign_vehicles(s, i, units)
        for (j, u), v in zip(keys, vehicles):
            lv = levels[u]
            km = s.distances[i][j]
            moves.append(
                Move(
                    vehicle=v.id,
                    origin=s.stations[i].id,
                    destination=s.stations[j].id,
                    level=lv.level if lv.executor is Executor.USER else None,
                    rate=lv.rate,
                    km=km,
                    cost=lv.rate * c * km,
                )
            )
    return make_plan(s, moves)


def plan_violations(plan: Plan, s: Scenario, tol: float = 1e-9) -> list[str]:
    """Every broken Plan invariant, as readable strings."""
    bad = []
    if abs(plan.total_cost - (plan.incentive_paid + plan.staff_cost)) > tol * max(1.0, plan.total_cost):
        bad.append("total_cost != incentive_paid + staff_cost")
    pos = {st.id: p for p, st in enumerate(s.stations)}
    stocks = list(stock_counts(s))
    seen = set()
    for mv in plan.moves:
        v = s.vehicle(mv.vehicle)
        if mv.vehicle in seen:
            bad.append(f"vehicle {mv.vehicle} moves twice")
        seen.add(mv.vehicle)
        if v.station != mv.origin:
            bad.append(f"vehicle {mv.vehicle} is not at station {mv.origin}")
        i, j = pos[mv.origin], pos[mv.destination]
        if i == j:
            bad.append(f"vehicle {mv.vehicle} moves to its own station")
        ex = Executor.USER if mv.by_user else Executor.STAFF
        if not _eligible(s, v, i, j, ex):
            bad.append(f"vehicle {mv.vehicle} cannot reach station {mv.destination} ({mv.executor})")
        stocks[i] -= 1
        stocks[j] += 1
    if tuple(stocks) != plan.final_stocks:
        bad.append("final stocks do not match the moves")
    for p, sj in enumerate(plan.final_stocks):
        lo, hi = s.bounds(p)
        if not lo <= sj <= hi:
            bad.append(f"station {s.stations[p].id} ends with {sj} outside [{lo}, {hi}]")
    if sum(plan.final_stocks) != s.n_vehicles:
        bad.append("vehicle count not conserved")
    return bad
