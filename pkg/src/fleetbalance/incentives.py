"""Escalating incentive bids: cap derivation and round-by-round simulation.

A relocation plan is first fixed. Its moves are then offered to the user
population level by level, at increasing rates. Whatever users do not take
after the last level is done by staff at full cost.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from fleetbalance.feasibility import Executor
from fleetbalance.milp import BuildMode, build_ilp1, build_ilp2
from fleetbalance.scenario import IncentiveLevel, Scenario
from fleetbalance.solver import OPTIMAL, Move, Plan, PlanError, extract_plan, make_plan, solve
from fleetbalance.solver.plan import assign_vehicles

DETERMINISTIC = "deterministic-caps"
BERNOULLI = "bernoulli"


class ProcessError(RuntimeError):
    """The bid process cannot start, e.g. no staff-only plan exists."""


def derive_caps(population: int, levels: Sequence[IncentiveLevel | float]) -> tuple[int, ...]:
    """Relocatable vehicles per level: floor(population * acceptance rate).

    Rates go through their decimal text so 200 * 0.005 is exactly 1.
    """
    if population < 0:
        raise ValueError("population must be non-negative")
    out = []
    for lv in levels:
        rate = lv.acceptance_rate if isinstance(lv, IncentiveLevel) else lv
        out.append(math.floor(population * Fraction(str(rate))))
    return tuple(out)


@dataclass(frozen=True)
class AcceptanceModel:
    kind: str = DETERMINISTIC
    probabilities: tuple[float, ...] = ()  # one per user level, bernoulli only
    defection_probability: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in (DETERMINISTIC, BERNOULLI):
            raise ValueError(f"unknown acceptance kind {self.kind!r}")
        for p in (*self.probabilities, self.defection_probability):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")


@dataclass
class RoundRecord:
    level: int
    rate: float
    offered: int
    acceptances: int
    defections: int
    filled: int


@dataclass
class RoundLog:
    rounds: list[RoundRecord]
    staff_fallback: int
    required_moves: int
    realized_cost: float
    realized_incentives: float
    staff_cost: float = field(init=False)

    def __post_init__(self):
        self.staff_cost = self.realized_cost - self.realized_incentives

    def to_dict(self) -> dict:
        return asdict(self)


def _check_ladder(s: Scenario) -> None:
    rates = [lv.rate for lv in s.levels]
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise ValueError(f"incentive rates must increase strictly, got {rates}")


def _staff_plan(s: Scenario, mode: BuildMode) -> Plan:
    model = build_ilp1(s, mode)
    res = solve(model)
    if res.status != OPTIMAL:
        raise ProcessError(f"no staff-only relocation plan exists ({res.status})")
    return extract_plan(res, model, s)


def _deterministic(s: Scenario, mode: BuildMode) -> tuple[RoundLog, Plan]:
    _staff_plan(s, mode)  # precondition
    caps = derive_caps(s.user_population, s.levels)
    model = build_ilp2(s, caps, mode)
    res = solve(model)
    if res.status != OPTIMAL:
        raise ProcessError(f"incentive model is {res.status}")
    plan = extract_plan(res, model, s)
    left = len(plan.moves)
    rounds = []
    for lv in s.levels:
        filled = sum(mv.level == lv.index for mv in plan.moves)
        rounds.append(RoundRecord(lv.index, lv.rate, left, filled, 0, filled))
        left -= filled
    log = RoundLog(rounds, left, len(plan.moves), plan.total_cost, plan.incentive_paid)
    return log, plan


def _bernoulli(s: Scenario, acc: AcceptanceModel, base: Plan, rng: np.random.Generator) -> tuple[RoundLog, Plan]:
    if len(acc.probabilities) != len(s.levels):
        raise ValueError(f"expected {len(s.levels)} acceptance probabilities, got {len(acc.probabilities)}")
    # a move is an (origin, destination) trip; vehicles are matched per origin at the end
    pool = [(s.station_index(mv.origin), s.station_index(mv.destination), mv.km) for mv in base.moves]
    taken: list[tuple[int, int, float, IncentiveLevel]] = []

    def units_at(origin: int, skip: int | None = None, extra: int | None = None):
        units = [(j, Executor.USER) for i, j, _, _ in taken if i == origin]
        if extra is not None:
            units.append((extra, Executor.USER))
        units += [(j, Executor.STAFF) for n, (i, j, _) in enumerate(pool) if i == origin and n != skip]
        return units

    def fillable(n: int) -> bool:
        i, j, _ = pool[n]
        try:
            assign_vehicles(s, i, units_at(i, skip=n, extra=j))
        except PlanError:
            return False
        return True

    rounds = []
    for lv, p in zip(s.levels, acc.probabilities):
        offer = sorted((n for n in range(len(pool)) if fillable(n)), key=lambda n: (-pool[n][2], pool[n][:2]))
        offer = [pool[n] for n in offer]
        accepted = min(int(rng.binomial(s.user_population, p)), len(offer))
        defected = filled = 0
        queue = list(offer)
        for _ in range(accepted):
            # the next trip a user can still do, most expensive first
            while queue and not fillable(pool.index(queue[0])):
                queue.pop(0)
            if not queue:
                break
            trip = queue.pop(0)
            if acc.defection_probability and rng.random() < acc.defection_probability:
                defected += 1
                continue
            pool.remove(trip)
            taken.append((trip[0], trip[1], trip[2], lv))
            filled += 1
        rounds.append(RoundRecord(lv.index, lv.rate, len(offer), accepted, defected, filled))

    c = s.cost_per_km
    moves = []
    for i in sorted({t[0] for t in taken} | {t[0] for t in pool}):
        units = units_at(i)
        vehicles = assign_vehicles(s, i, units)
        trips = [(j, km, lv) for oi, j, km, lv in taken if oi == i] + [(j, km, None) for oi, j, km in pool if oi == i]
        for (j, km, lv), v in zip(trips, vehicles):
            rate = lv.rate if lv else 1.0
            moves.append(
                Move(v.id, s.stations[i].id, s.stations[j].id, lv.index if lv else None, rate, km, rate * c * km)
            )
    plan = make_plan(s, moves)
    log = RoundLog(rounds, len(pool), len(base.moves), plan.total_cost, plan.incentive_paid)
    return log, plan


def run_rounds(
    s: Scenario, acc: AcceptanceModel, *, mode: BuildMode | str = BuildMode.PHYSICAL
) -> tuple[RoundLog, Plan]:
    """Simulate the bid process once.

    ``deterministic-caps`` reproduces the incentive model's optimum. In
    ``bernoulli`` mode the moves of the staff-only optimum are offered to
    users, with acceptances drawn from Binomial(population, p_u).
    """
    _check_ladder(s)
    mode = BuildMode(mode)
    if acc.kind == DETERMINISTIC:
        return _deterministic(s, mode)
    return _bernoulli(s, acc, _staff_plan(s, mode), np.random.default_rng(acc.seed))


@dataclass
class MonteCarloSummary:
    trials: int
    mean: float
    stddev: float
    minimum: float
    maximum: float
    fill_rates: tuple[float, ...]  # share of required moves filled per level, averaged
    costs: tuple[float, ...] = field(repr=False, default=())

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("costs")
        out["fill_rates"] = list(self.fill_rates)
        return out


def _trial(args) -> RoundLog:
    s, acc, base, seed = args
    return _bernoulli(s, acc, base, np.random.default_rng(seed))[0]


def monte_carlo(
    s: Scenario,
    acc: AcceptanceModel,
    trials: int,
    *,
    mode: BuildMode | str = BuildMode.PHYSICAL,
    workers: int = 1,
) -> MonteCarloSummary:
    """Repeat the process with per-trial seeds spawned from ``acc.seed``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    _check_ladder(s)
    mode = BuildMode(mode)
    if acc.kind == DETERMINISTIC:
        logs = [_deterministic(s, mode)[0]] * trials
    else:
        base = _staff_plan(s, mode)
        seeds = np.random.SeedSequence(acc.seed).spawn(trials)
        jobs = [(s, acc, base, seed) for seed in seeds]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                logs = list(pool.map(_trial, jobs, chunksize=max(1, trials // (4 * workers))))
        else:
            logs = [_trial(job) for job in jobs]
    costs = np.array([log.realized_cost for log in logs])
    fill = np.zeros(len(s.levels))
    for log in logs:
        if log.required_moves:
            fill += np.array([r.filled for r in log.rounds]) / log.required_moves
    return MonteCarloSummary(
        trials=trials,
        mean=float(costs.mean()),
        stddev=float(costs.std()),
        minimum=float(costs.min()),
        maximum=float(costs.max()),
        fill_rates=tuple(float(v) for v in fill / trials),
        costs=tuple(float(v) for v in costs),
    )
