"""Battery feasibility of relocation trips and per-arc vehicle counts."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from fleetbalance.scenario import Relaxation, Scenario, Vehicle, stock_counts


class Executor(str, enum.Enum):
    STAFF = "staff"
    USER = "user"


def _can_serve(s: Scenario, v: Vehicle, origin: int, dest: int, executor: Executor) -> bool:
    if v.autonomy_km - s.distances[origin][dest] >= 0:
        return True
    return executor is Executor.STAFF and s.relaxation is Relaxation.STAFF_VAN and v.van_portable


def can_serve(s: Scenario, vehicle_id: int, dest_pos: int, executor: Executor) -> bool:
    """Whether ``executor`` may move the vehicle from its station to ``dest_pos``.

    Staff may load van-portable vehicles under the ``staff-van`` policy
    regardless of charge; users always drive.
    """
    v = s.vehicle(vehicle_id)
    return _can_serve(s, v, s.station_index(v.station), dest_pos, Executor(executor))


def battery_feasible(vehicle_id: int, dest_station_id: int, s: Scenario) -> bool:
    """True iff the remaining range covers the trip (equality counts as feasible)."""
    v = s.vehicle(vehicle_id)
    i = s.station_index(v.station)
    j = s.station_index(dest_station_id)
    return v.autonomy_km - s.distances[i][j] >= 0


def feasible_count(i: int, j: int, executor: Executor | str, s: Scenario) -> int:
    """Number of vehicles at station id ``i`` that ``executor`` can move to station id ``j``."""
    if i == j:
        raise ValueError("origin and destination must differ")
    ip, jp = s.station_index(i), s.station_index(j)
    ex = Executor(executor)
    return sum(_can_serve(s, v, ip, jp, ex) for v in s.vehicles_at(ip))


@dataclass(frozen=True)
class FeasibilityTable:
    """Per-vehicle and per-arc feasibility for both executor classes.

    ``per_vehicle[ex]`` has shape (|K|, |I|), rows in vehicle order; entry
    (k, j) tells whether vehicle k can be moved from its station to j.
    ``per_arc[ex]`` has shape (|I|, |I|); the diagonal holds the station
    stock since every vehicle trivially reaches its own station.
    """

    per_vehicle: dict[Executor, np.ndarray]
    per_arc: dict[Executor, np.ndarray]
    relaxation: Relaxation

    def arc(self, i: int, j: int, executor: Executor | str = Executor.STAFF) -> int:
        return int(self.per_arc[Executor(executor)][i, j])


def feasibility_matrix(s: Scenario) -> FeasibilityTable:
    n, K = s.n_stations, s.n_vehicles
    dist = s.distance_array()
    pos = {st.id: p for p, st in enumerate(s.stations)}
    home = np.array([pos[v.station] for v in s.vehicles], dtype=int)
    autonomy = np.array([v.autonomy_km for v in s.vehicles], dtype=float)
    portable = np.array([v.van_portable for v in s.vehicles], dtype=bool)

    if K:
        user = (autonomy[:, None] - dist[home, :]) >= 0
    else:
        user = np.zeros((0, n), dtype=bool)
    staff = user.copy()
    if s.relaxation is Relaxation.STAFF_VAN:
        staff |= portable[:, None]

    per_arc = {}
    for ex, table in ((Executor.USER, user), (Executor.STAFF, staff)):
        counts = np.zeros((n, n), dtype=int)
        np.add.at(counts, home, table.astype(int))
        per_arc[ex] = counts
    return FeasibilityTable({Executor.USER: user, Executor.STAFF: staff}, per_arc, s.relaxation)


def arc_caps(s: Scenario, executor: Executor) -> np.ndarray:
    """nk^max matrix for one executor class, zero on the diagonal."""
    caps = feasibility_matrix(s).per_arc[executor].copy()
    np.fill_diagonal(caps, 0)
    return caps


def station_diagnostics(s: Scenario) -> list[dict]:
    """Reachable stock interval per station under staff feasibility.

    A station whose interval misses ``[n_min, n_max]`` explains an
    infeasible staff-only model.
    """
    stock = stock_counts(s)
    caps = arc_caps(s, Executor.STAFF)
    out = []
    for j, st in enumerate(s.stations):
        lo, hi = s.bounds(j)
        max_in = int(caps[:, j].sum())
        max_out = int(min(stock[j], caps[j, :].sum()))
        reach_hi = stock[j] + max_in
        reach_lo = stock[j] - max_out
        out.append(
            {
                "station": st.id,
                "initial": stock[j],
                "n_min": lo,
                "n_max": hi,
                "max_inflow": max_in,
                "max_outflow": max_out,
                "deficit": max(0, lo - reach_hi),
                "excess": max(0, reach_lo - hi),
            }
        )
    return out
