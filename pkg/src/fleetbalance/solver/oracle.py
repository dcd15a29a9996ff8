"""Exhaustive reference optimum, independent of the simplex path.

Enumeration runs in two stages. The outer search fixes how many vehicles
travel along each arc (origin, destination). Each complete flow that meets
the stock bounds is then priced exactly by trying every split of its units
over the incentive levels. Under physical semantics a split only counts if
the moves leaving each origin can be matched to distinct vehicles there.

Pruning uses two things. The first is a cost lower bound: committed units,
plus the cheapest inbound trip for every unit a station still lacks, priced
by handing the cheapest rates to the longest trips. The second is a
reachability test. Neither can discard an optimum.
"""

from __future__ import annotations

import math
from typing import Sequence

from fleetbalance.feasibility import Executor
from fleetbalance.scenario import Relaxation, Scenario, stock_counts

EPS = 1e-9


class InstanceTooLarge(ValueError):
    pass


def _levels(s: Scenario, model: str, caps: Sequence[int] | None):
    if model == "ilp1":
        return [(1.0, s.n_vehicles, Executor.STAFF, None)]
    caps = list(caps or [])
    if len(caps) != len(s.levels):
        raise ValueError("one cap per user level is required")
    out = [(lv.rate, int(cap), Executor.USER, lv.index) for lv, cap in zip(s.levels, caps)]
    out.append((1.0, s.n_vehicles, Executor.STAFF, None))
    return out


def _serves(s: Scenario, autonomy: float, portable: bool, dist: float, ex: Executor) -> bool:
    if autonomy - dist >= 0:
        return True
    return ex is Executor.STAFF and s.relaxation is Relaxation.STAFF_VAN and portable


def _matchable(units, fleet, s: Scenario) -> bool:
    """Units are (distance, executor set); each needs its own vehicle."""
    owner: dict[int, int] = {}

    def augment(u: int, seen: set[int]) -> bool:
        dist, executors = units[u]
        for k, (a, portable) in enumerate(fleet):
            if k in seen or not any(_serves(s, a, portable, dist, ex) for ex in executors):
                continue
            seen.add(k)
            if k not in owner or augment(owner[k], seen):
                owner[k] = u
                return True
        return False

    return all(augment(u, set()) for u in range(len(units)))


def _rate_cost(distances: list[float], ladder: list[tuple[float, int]]) -> float:
    """Cheapest pricing of trips when each rate may be used ``cap`` times."""
    total = 0.0
    n = 0
    ordered = sorted(distances, reverse=True)
    for rate, cap in ladder:
        take = ordered[n : n + cap]
        total += rate * sum(take)
        n += len(take)
        if n == len(ordered):
            return total
    return math.inf


def total_deficit(s: Scenario) -> int:
    stock = stock_counts(s)
    out = 0
    for j in range(s.n_stations):
        lo, hi = s.bounds(j)
        out += max(0, lo - stock[j]) + max(0, stock[j] - hi)
    return out


def brute_force_optima(
    s: Scenario,
    model: str = "ilp1",
    caps: Sequence[int] | None = None,
    *,
    semantics: str = "physical",
    check_size: bool = True,
    node_budget: int = 20_000_000,
) -> tuple[float | None, list[dict]]:
    """Optimal cost and every optimal flow ``{(i, j, level): count}``.

    Station indices are positions; ``level`` is the user level index or
    ``None`` for staff. Returns ``(None, [])`` when infeasible.
    """
    if check_size and (s.n_stations > 4 or total_deficit(s) > 6):
        raise InstanceTooLarge(f"{s.n_stations} stations, total deficit {total_deficit(s)}")
    physical = semantics == "physical"
    levels = _levels(s, model, caps)
    executors = {lv[2] for lv in levels}
    n = s.n_stations
    c = s.cost_per_km
    stock = list(stock_counts(s))
    bounds = [s.bounds(j) for j in range(n)]
    fleets = [[(v.autonomy_km, v.van_portable) for v in s.vehicles_at(i)] for i in range(n)]
    ladder = sorted(((rate * c, cap) for rate, cap, _, _ in levels), key=lambda t: t[0])

    def per_level_cap(i: int, j: int, u: int) -> int:
        ex = levels[u][2]
        if physical:
            return sum(_serves(s, a, p, s.distances[i][j], ex) for a, p in fleets[i])
        # any vehicle of the fleet may be booked on an arc, at most once per level
        return min(
            sum(_serves(s, a, p, s.distances[i][j], ex) for a, p in fleets[i]),
            levels[u][1],
            s.n_vehicles,
        )

    arcs = []  # (i, j, distance, max units, per-level caps)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            lvl = [per_level_cap(i, j, u) for u in range(len(levels))]
            if physical:
                hi = sum(any(_serves(s, a, p, s.distances[i][j], ex) for ex in executors) for a, p in fleets[i])
            else:
                hi = sum(lvl)
            if hi:
                arcs.append((i, j, s.distances[i][j], hi, lvl))
    T = len(arcs)
    shortest = [[math.inf] * n for _ in range(T + 1)]
    room = [[0] * n for _ in range(T + 1)]
    out_room = [[0] * n for _ in range(T + 1)]
    for t in range(T - 1, -1, -1):
        i, j, d, hi, _ = arcs[t]
        shortest[t] = shortest[t + 1][:]
        room[t] = room[t + 1][:]
        out_room[t] = out_room[t + 1][:]
        shortest[t][j] = min(shortest[t][j], d)
        room[t][j] += hi
        out_room[t][i] += hi
    last_of_origin = {arc[0]: t for t, arc in enumerate(arcs)}

    match_memo: dict = {}

    def origin_matchable(i: int, units: list) -> bool:
        key = (i, tuple(sorted((d, tuple(sorted(e.value for e in ex))) for d, ex in units)))
        hit = match_memo.get(key)
        if hit is None:
            hit = match_memo[key] = _matchable(units, fleets[i], s)
        return hit

    f = [0] * T
    committed: list[float] = []
    out_count = [0] * n
    best = [math.inf]
    optima: list[dict] = []
    nodes = [0]

    def tick() -> None:
        nodes[0] += 1
        if nodes[0] > node_budget:
            raise InstanceTooLarge("node budget exhausted")

    def lower_bound(t: int) -> float:
        extra: list[float] = []
        for j in range(n):
            lo, hi = bounds[j]
            need = lo - stock[j]
            if need > 0:
                if need > room[t][j]:
                    return math.inf
                extra.extend([shortest[t][j]] * need)
            if stock[j] - hi > out_room[t][j]:
                return math.inf
        return _rate_cost(committed + extra, ladder)

    def price(flow_arcs: list[int]) -> None:
        """Try every split of the committed flow over the levels."""
        split = [[0] * len(levels) for _ in flow_arcs]
        used = [0] * len(levels)

        def feasible_split() -> bool:
            if not physical:
                return True
            for i in range(n):
                units = []
                for a, t in enumerate(flow_arcs):
                    if arcs[t][0] == i:
                        for u, cnt in enumerate(split[a]):
                            units.extend([(arcs[t][2], (levels[u][2],))] * cnt)
                if units and not origin_matchable(i, units):
                    return False
            return True

        def rest_bound(a: int) -> float:
            ladder_left = sorted(
                ((levels[u][0] * c, levels[u][1] - used[u]) for u in range(len(levels))), key=lambda t: t[0]
            )
            dists = []
            for b in range(a, len(flow_arcs)):
                dists.extend([arcs[flow_arcs[b]][2]] * f[flow_arcs[b]])
            return _rate_cost(dists, ladder_left)

        def assign(a: int, u: int, left: int, cost: float) -> None:
            tick()
            if a == len(flow_arcs):
                if cost <= best[0] + EPS and feasible_split():
                    record(flow_arcs, split, cost)
                return
            t = flow_arcs[a]
            if u == len(levels) - 1:
                counts = [left] if left <= levels[u][1] - used[u] else []
            else:
                counts = range(min(left, levels[u][1] - used[u]) + 1)
            for cnt in counts:
                if cnt > arcs[t][4][u]:
                    break
                split[a][u] = cnt
                used[u] += cnt
                step = cost + cnt * levels[u][0] * c * arcs[t][2]
                if u == len(levels) - 1:
                    if step + rest_bound(a + 1) <= best[0] + EPS:
                        assign(a + 1, 0, f[flow_arcs[a + 1]] if a + 1 < len(flow_arcs) else 0, step)
                else:
                    assign(a, u + 1, left - cnt, step)
                used[u] -= cnt
                split[a][u] = 0

        first = f[flow_arcs[0]] if flow_arcs else 0
        assign(0, 0, first, 0.0)

    def record(flow_arcs: list[int], split: list[list[int]], cost: float) -> None:
        flow = {}
        for a, t in enumerate(flow_arcs):
            i, j = arcs[t][0], arcs[t][1]
            for u, cnt in enumerate(split[a]):
                if cnt:
                    flow[(i, j, levels[u][3])] = cnt
        if cost < best[0] - EPS:
            best[0] = cost
            optima.clear()
        optima.append(flow)

    def dfs(t: int) -> None:
        tick()
        if lower_bound(t) > best[0] + EPS:
            return
        if t == T:
            if all(bounds[j][0] <= stock[j] <= bounds[j][1] for j in range(n)):
                price([a for a in range(T) if f[a]])
            return
        i, j, d, hi, _ = arcs[t]
        if physical:
            hi = min(hi, len(fleets[i]) - out_count[i])
        end_of_origin = last_of_origin[i] == t
        for val in range(hi + 1):
            f[t] = val
            stock[i] -= val
            stock[j] += val
            out_count[i] += val
            committed.extend([d] * val)
            ok = True
            if physical and end_of_origin and out_count[i]:
                units = []
                for a in range(t + 1):
                    if arcs[a][0] == i and f[a]:
                        units.extend([(arcs[a][2], executors)] * f[a])
                ok = origin_matchable(i, units)
            if ok:
                dfs(t + 1)
            del committed[len(committed) - val :]
            stock[i] += val
            stock[j] -= val
            out_count[i] -= val
            f[t] = 0
            if not ok:
                break  # more units out of this origin cannot match either

    dfs(0)
    if math.isinf(best[0]):
        return None, []
    return best[0], optima


def brute_force(
    s: Scenario,
    model: str = "ilp1",
    caps: Sequence[int] | None = None,
    *,
    semantics: str = "physical",
    check_size: bool = True,
) -> float | None:
    """Exact optimum by exhaustive enumeration; ``None`` when infeasible."""
    value, _ = brute_force_optima(s, model, caps, semantics=semantics, check_size=check_size)
    return value
