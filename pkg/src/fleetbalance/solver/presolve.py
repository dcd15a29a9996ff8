"""Column aggregation for models with interchangeable vehicles.

Two binary columns are interchangeable when they share the objective
coefficient and every coefficient outside the per-vehicle assignment rows.
Vehicles whose assignment rows cover the same set of column signatures form
one *type*. Merging per (signature, type) gives integer flow columns plus one
row per type bounding its total use by the number of vehicles of that type.
Any integer point of the merged model splits back into 0/1 columns, so the
merged and original models have the same optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fleetbalance.milp import ASSIGNMENT, EQ, GE, LE, MilpModel

_SENSE = {LE: -1, EQ: 0, GE: 1}


@dataclass
class ArrayModel:
    c: np.ndarray
    A: np.ndarray
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray


def to_arrays(m: MilpModel) -> ArrayModel:
    A = np.zeros((m.n_constraints, m.n_variables))
    for r, con in enumerate(m.constraints):
        for col, a in con.terms:
            A[r, col] += a
    return ArrayModel(
        c=m.objective_vector(),
        A=A,
        senses=np.array([_SENSE[con.sense] for con in m.constraints], dtype=int),
        b=np.array([con.rhs for con in m.constraints], dtype=float),
        lb=np.array([v.lower for v in m.variables], dtype=float),
        ub=np.array([v.upper for v in m.variables], dtype=float),
        integer=np.array([v.kind in ("binary", "integer") for v in m.variables], dtype=bool),
    )


@dataclass
class Aggregation:
    arrays: ArrayModel
    groups: list[list[int]]  # original columns behind each merged column
    group_type: list[int]  # vehicle type per merged column, -1 if none
    signatures: list[tuple]
    type_rows: list[list[int]]  # assignment rows per type
    row_cols: dict[int, dict[tuple, int]]  # assignment row -> signature -> column
    lb: np.ndarray
    ub: np.ndarray
    infeasible: bool = False
    n_original: int = field(init=False)

    def __post_init__(self):
        self.n_original = self.lb.shape[0]

    def expand(self, y: np.ndarray, integral: bool = True) -> np.ndarray:
        """Map a merged-space point back onto the original columns."""
        x = np.where(self.ub > self.lb, 0.0, self.lb)
        if integral:
            y = np.round(y)
        next_row = [0] * len(self.type_rows)
        for g, cols in enumerate(self.groups):
            val = float(y[g])
            t = self.group_type[g]
            if t < 0:
                self._spread(x, cols, val, integral)
                continue
            rows = self.type_rows[t]
            sig = self.signatures[g]
            if not integral:
                for r in rows:
                    x[self.row_cols[r][sig]] = val / len(rows)
                continue
            need = int(val)
            if next_row[t] + need > len(rows):
                raise RuntimeError("aggregated flow exceeds the vehicles of its type")
            for r in rows[next_row[t] : next_row[t] + need]:
                x[self.row_cols[r][sig]] = 1.0
            next_row[t] += need
        return x

    def _spread(self, x: np.ndarray, cols: list[int], val: float, integral: bool) -> None:
        lows, highs = self.lb[cols], self.ub[cols]
        x[cols] = lows
        rest = val - lows.sum()
        if integral:
            for col, lo, hi in zip(cols, lows, highs):
                take = min(hi - lo, rest)
                x[col] += take
                rest -= take
                if rest <= 0:
                    break
        else:
            span = highs - lows
            if span.sum() > 0:
                x[cols] += rest * span / span.sum()


def _signatures(m: MilpModel, active: np.ndarray, assign: set[int]) -> dict[int, tuple]:
    col_terms: dict[int, list] = {c: [] for c in np.flatnonzero(active)}
    for r, con in enumerate(m.constraints):
        if r in assign:
            continue
        for col, a in con.terms:
            if active[col]:
                col_terms[col].append((r, a))
    return {
        col: (m.variables[col].kind, m.variables[col].objective, tuple(terms)) for col, terms in col_terms.items()
    }


def _candidate_rows(m: MilpModel, active: np.ndarray) -> set[int]:
    seen: set[int] = set()
    rows = set()
    for r, con in enumerate(m.constraints):
        if con.tag != ASSIGNMENT or con.sense != LE or con.rhs != 1:
            continue
        if any(a != 1 for _, a in con.terms):
            continue
        if any(not active[col] and m.variables[col].lower != 0 for col, _ in con.terms):
            continue
        cols = [col for col, _ in con.terms if active[col]]
        if any(m.variables[col].kind != "binary" for col in cols) or seen.intersection(cols):
            continue
        seen.update(cols)
        rows.add(r)
    return rows


def aggregate(m: MilpModel) -> Aggregation:
    lb = np.array([v.lower for v in m.variables], dtype=float)
    ub = np.array([v.upper for v in m.variables], dtype=float)
    active = ub > lb

    assign = _candidate_rows(m, active)
    while True:
        sig_of = _signatures(m, active, assign)
        clash = set()
        for r in assign:
            sigs = [sig_of[col] for col, _ in m.constraints[r].terms if active[col]]
            if len(sigs) != len(set(sigs)):
                clash.add(r)
        if not clash:
            break
        assign -= clash

    type_ids: dict[frozenset, int] = {}
    type_rows: list[list[int]] = []
    row_type: dict[int, int] = {}
    row_cols: dict[int, dict[tuple, int]] = {}
    row_of_col: dict[int, int] = {}
    for r in sorted(assign):
        mapping = {sig_of[col]: col for col, _ in m.constraints[r].terms if active[col]}
        if not mapping:
            continue
        t = type_ids.setdefault(frozenset(mapping), len(type_rows))
        if t == len(type_rows):
            type_rows.append([])
        type_rows[t].append(r)
        row_type[r] = t
        row_cols[r] = mapping
        for col in mapping.values():
            row_of_col[col] = r

    group_index: dict[tuple, int] = {}
    groups: list[list[int]] = []
    group_type: list[int] = []
    signatures: list[tuple] = []
    for col in np.flatnonzero(active):
        col = int(col)
        r = row_of_col.get(col)
        t = row_type[r] if r is not None else -1
        key = (sig_of[col], t)
        g = group_index.get(key)
        if g is None:
            g = group_index[key] = len(groups)
            groups.append([])
            group_type.append(t)
            signatures.append(sig_of[col])
        groups[g].append(col)

    # fixed columns move to the right-hand side
    fixed = np.where(active, 0.0, lb)
    kept = [r for r in range(m.n_constraints) if r not in assign]
    pos = {r: p for p, r in enumerate(kept)}
    n_rows = len(kept) + len(type_rows)
    A = np.zeros((n_rows, len(groups)))
    b = np.zeros(n_rows)
    senses = np.full(n_rows, -1, dtype=int)
    for p, r in enumerate(kept):
        con = m.constraints[r]
        b[p] = con.rhs - sum(a * fixed[col] for col, a in con.terms if not active[col])
        senses[p] = _SENSE[con.sense]
    for g, sig in enumerate(signatures):
        for r, a in sig[2]:
            A[pos[r], g] = a
        if group_type[g] >= 0:
            A[len(kept) + group_type[g], g] = 1.0
    for t, rows in enumerate(type_rows):
        b[len(kept) + t] = len(rows)

    nonempty = np.any(A != 0, axis=1)
    infeasible = False
    for p in np.flatnonzero(~nonempty):
        s, rhs = senses[p], b[p]
        if (s == -1 and rhs < -1e-9) or (s == 1 and rhs > 1e-9) or (s == 0 and abs(rhs) > 1e-9):
            infeasible = True

    arrays = ArrayModel(
        c=np.array([m.variables[cols[0]].objective for cols in groups]),
        A=A[nonempty],
        senses=senses[nonempty],
        b=b[nonempty],
        lb=np.array([lb[cols].sum() for cols in groups]),
        ub=np.array([ub[cols].sum() for cols in groups]),
        integer=np.array([m.variables[cols[0]].kind != "continuous" for cols in groups], dtype=bool),
    )
    return Aggregation(arrays, groups, group_type, signatures, type_rows, row_cols, lb, ub, infeasible)
