"""Integer linear model representation and the relocation model builders."""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fleetbalance.feasibility import Executor, feasibility_matrix
from fleetbalance.scenario import Scenario, dump_scenario, stock_counts

LE, EQ, GE = "<=", "=", ">="

# Row tags; the solver's aggregation presolve keys off ASSIGNMENT.
BALANCE = "balance"
UPPER = "upper"
LOWER = "lower"
ARC_CAP = "arc-cap"
LEVEL_CAP = "level-cap"
ASSIGNMENT = "vehicle"


class BuildMode(str, enum.Enum):
    FAITHFUL = "faithful"
    PHYSICAL = "physical"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "binary" | "integer"
    lower: float
    upper: float
    objective: float = 0.0


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    tag: str = ""


@dataclass(frozen=True)
class LevelInfo:
    level: int  # 1-based
    rate: float
    cap: int
    executor: Executor


@dataclass(frozen=True)
class MilpModel:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    sense: str = "minimize"
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def column(self, name: str) -> int:
        index = self.metadata.get("_by_name")
        if index is None:
            index = {v.name: c for c, v in enumerate(self.variables)}
            self.metadata["_by_name"] = index
        return index[name]

    def objective_vector(self) -> np.ndarray:
        return np.array([v.objective for v in self.variables], dtype=float)

    def objective_value(self, x: Sequence[float]) -> float:
        return float(np.dot(self.objective_vector(), np.asarray(x, dtype=float)))


def scenario_digest(s: Scenario) -> str:
    return hashlib.sha256(dump_scenario(s).encode("utf-8")).hexdigest()[:16]


def _build(s: Scenario, levels: list[LevelInfo], mode: BuildMode, model: str) -> MilpModel:
    mode = BuildMode(mode)
    n, K = s.n_stations, s.n_vehicles
    ids = [st.id for st in s.stations]
    vids = [v.id for v in s.vehicles]
    pos = {sid: p for p, sid in enumerate(ids)}
    home = [pos[v.station] for v in s.vehicles]
    table = feasibility_matrix(s)
    stock = stock_counts(s)
    c = s.cost_per_km
    single = model == "ilp1"

    variables: list[Variable] = []
    x_index: dict[tuple[int, int, int, int], int] = {}
    for i in range(n):
        for j in range(n):
            for k in range(K):
                for u, lv in enumerate(levels):
                    fixed = mode is BuildMode.PHYSICAL and (
                        home[k] != i or i == j or not table.per_vehicle[lv.executor][k, j]
                    )
                    name = f"x_{ids[i]}_{ids[j]}_{vids[k]}" + ("" if single else f"_{lv.level}")
                    x_index[(i, j, k, u)] = len(variables)
                    variables.append(
                        Variable(name, "binary", 0.0, 0.0 if fixed else 1.0, lv.rate * c * s.distances[i][j])
                    )
    s_index = {}
    for j in range(n):
        s_index[j] = len(variables)
        variables.append(Variable(f"s_{ids[j]}", "integer", 0.0, float(K), 0.0))

    constraints: list[Constraint] = []

    def add(name: str, coeffs: dict[int, float], sense: str, rhs: float, tag: str) -> None:
        terms = tuple((col, a) for col, a in sorted(coeffs.items()) if a != 0)
        if terms:
            constraints.append(Constraint(name, terms, sense, float(rhs), tag))

    nU = len(levels)
    for j in range(n):
        # s_j - inflow + outflow = s_hat_j; diagonal terms cancel
        coeffs: dict[int, float] = {s_index[j]: 1.0}
        for i in range(n):
            for k in range(K):
                for u in range(nU):
                    col_in = x_index[(i, j, k, u)]
                    col_out = x_index[(j, i, k, u)]
                    coeffs[col_in] = coeffs.get(col_in, 0.0) - 1.0
                    coeffs[col_out] = coeffs.get(col_out, 0.0) + 1.0
        add(f"balance_{ids[j]}", coeffs, EQ, stock[j], BALANCE)
    for j in range(n):
        add(f"nmax_{ids[j]}", {s_index[j]: 1.0}, LE, s.bounds(j)[1], UPPER)
    for j in range(n):
        add(f"nmin_{ids[j]}", {s_index[j]: 1.0}, GE, s.bounds(j)[0], LOWER)
    for u, lv in enumerate(levels):
        caps = table.per_arc[lv.executor]
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                coeffs = {x_index[(i, j, k, u)]: 1.0 for k in range(K)}
                suffix = "" if single else f"_{lv.level}"
                add(f"arccap_{ids[i]}_{ids[j]}{suffix}", coeffs, LE, caps[i, j], ARC_CAP)
    if not single:
        for u, lv in enumerate(levels):
            coeffs = {x_index[(i, j, k, u)]: 1.0 for i in range(n) for j in range(n) for k in range(K)}
            add(f"levelcap_{lv.level}", coeffs, LE, lv.cap, LEVEL_CAP)
    if mode is BuildMode.PHYSICAL:
        for k in range(K):
            i = home[k]
            coeffs = {x_index[(i, j, k, u)]: 1.0 for j in range(n) if j != i for u in range(nU)}
            add(f"once_{vids[k]}", coeffs, LE, 1, ASSIGNMENT)

    metadata = {
        "model": model,
        "mode": mode.value,
        "digest": scenario_digest(s),
        "x_index": x_index,
        "s_index": s_index,
        "levels": levels,
        "station_ids": ids,
        "vehicle_ids": vids,
    }
    return MilpModel(tuple(variables), tuple(constraints), "minimize", metadata)


def build_ilp1(s: Scenario, mode: BuildMode | str = BuildMode.PHYSICAL) -> MilpModel:
    """Staff-only relocation model."""
    levels = [LevelInfo(1, 1.0, s.n_vehicles, Executor.STAFF)]
    return _build(s, levels, BuildMode(mode), "ilp1")


def build_ilp2(s: Scenario, caps: Sequence[int], mode: BuildMode | str = BuildMode.PHYSICAL) -> MilpModel:
    """Incentive-augmented model; the staff level is appended after the user levels."""
    caps = list(caps)
    if len(caps) != len(s.levels):
        raise ValueError(f"expected {len(s.levels)} caps (one per user level), got {len(caps)}")
    levels = [LevelInfo(lv.index, lv.rate, int(cap), Executor.USER) for lv, cap in zip(s.levels, caps)]
    levels.append(LevelInfo(len(s.levels) + 1, 1.0, s.n_vehicles, Executor.STAFF))
    return _build(s, levels, BuildMode(mode), "ilp2")


def model_dimensions(m: MilpModel) -> dict[str, int]:
    binaries = sum(v.kind == "binary" for v in m.variables)
    integers = sum(v.kind == "integer" for v in m.variables)
    return {
        "variables": m.n_variables,
        "constraints": m.n_constraints,
        "binaries": binaries,
        "integers": integers,
    }


def row_activity(con: Constraint, x: Sequence[float]) -> float:
    return float(sum(a * x[col] for col, a in con.terms))


def violated_rows(m: MilpModel, x: Sequence[float], tol: float = 1e-6) -> list[str]:
    """Names of constraints (and bounds) that ``x`` violates beyond ``tol``."""
    bad = []
    for con in m.constraints:
        act = row_activity(con, x)
        if con.sense == LE and act > con.rhs + tol:
            bad.append(con.name)
        elif con.sense == GE and act < con.rhs - tol:
            bad.append(con.name)
        elif con.sense == EQ and abs(act - con.rhs) > tol:
            bad.append(con.name)
    for col, v in enumerate(m.variables):
        if x[col] < v.lower - tol or x[col] > v.upper + tol:
            bad.append(f"bound:{v.name}")
    return bad


def _fmt(a: float) -> str:
    return repr(int(a)) if float(a).is_integer() else repr(float(a))


def _wrap_terms(terms: list[str], indent: str = "   ") -> list[str]:
    lines, cur = [], ""
    for t in terms:
        if cur and len(cur) + len(t) > 200:
            lines.append(cur)
            cur = indent
        cur += t
    if cur:
        lines.append(cur)
    return lines


def _linear(terms: list[tuple[float, str]]) -> list[str]:
    out = []
    for n, (a, name) in enumerate(terms):
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        coef = "" if mag == 1 else _fmt(mag) + " "
        if n == 0:
            out.append(("- " if a < 0 else "") + coef + name)
        else:
            out.append(f" {sign} {coef}{name}")
    return out


def write_lp(m: MilpModel) -> str:
    """Render the model in CPLEX LP text format."""
    meta = m.metadata
    lines = [f"\\ {meta.get('model', 'model')} ({meta.get('mode', '')}) digest {meta.get('digest', '')}", "Minimize"]
    obj = [(v.objective, v.name) for v in m.variables if v.objective != 0]
    body = _linear(obj) if obj else ["0 " + m.variables[0].name] if m.variables else ["0"]
    lines.extend(_wrap_terms([" obj: "] + body))
    lines.append("Subject To")
    for con in m.constraints:
        terms = _linear([(a, m.variables[col].name) for col, a in con.terms])
        lines.extend(_wrap_terms([f" {con.name}: "] + terms + [f" {con.sense} {_fmt(con.rhs)}"]))
    lines.append("Bounds")
    for v in m.variables:
        if v.kind == "binary" and v.lower == 0 and v.upper == 1:
            continue
        if v.lower == v.upper:
            lines.append(f" {v.name} = {_fmt(v.lower)}")
        elif math.isinf(v.upper):
            lines.append(f" {v.name} >= {_fmt(v.lower)}")
        else:
            lines.append(f" {_fmt(v.lower)} <= {v.name} <= {_fmt(v.upper)}")
    binaries = [v.name for v in m.variables if v.kind == "binary"]
    generals = [v.name for v in m.variables if v.kind == "integer"]
    if binaries:
        lines.append("Binary")
        lines.extend(_wrap_terms([" " + b for b in binaries], indent=""))
    if generals:
        lines.append("General")
        lines.extend(_wrap_terms([" " + g for g in generals], indent=""))
    lines.append("End")
    return "\n".join(lines) + "\n"
