from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from fleetbalance.milp import MilpModel
from fleetbalance.solver.bnb import INT_TOL, branch_and_bound
from fleetbalance.solver.presolve import aggregate, to_arrays
from fleetbalance.solver.simplex import solve_lp

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration-limit"


@dataclass
class SolveResult:
    status: str
    objective: float
    assignment: np.ndarray | None  # one value per model variable
    nodes_explored: int
    proof_gap: float
    lp_iterations: int = 0

    def value(self, model: MilpModel, name: str) -> float:
        return float(self.assignment[model.column(name)])


@dataclass
class RelaxationResult:
    status: str
    assignment: np.ndarray | None
    lower_bound: float
    iterations: int


def _apply_fixings(lb, ub, model: MilpModel, fixings: Mapping | None):
    lb, ub = lb.copy(), ub.copy()
    for key, value in (fixings or {}).items():
        col = model.column(key) if isinstance(key, str) else int(key)
        lo, hi = value if isinstance(value, tuple) else (value, value)
        lb[col], ub[col] = lo, hi
    return lb, ub


def _fixed_model(model: MilpModel, fixings: Mapping | None) -> MilpModel:
    if not fixings:
        return model
    lb, ub = _apply_fixings(
        np.array([v.lower for v in model.variables]), np.array([v.upper for v in model.variables]), model, fixings
    )
    variables = tuple(replace(v, lower=float(lo), upper=float(hi)) for v, lo, hi in zip(model.variables, lb, ub))
    return replace(model, variables=variables)


def solve_lp_relaxation(
    model: MilpModel, fixings: Mapping | None = None, *, presolve: bool = True, kernels=None
) -> RelaxationResult:
    """Continuous relaxation under optional bound overrides.

    ``fixings`` maps a variable name or column to a value or a
    ``(lower, upper)`` pair.
    """
    model = _fixed_model(model, fixings)
    if presolve:
        agg = aggregate(model)
        if agg.infeasible:
            return RelaxationResult(INFEASIBLE, None, np.inf, 0)
        a = agg.arrays
        res = solve_lp(a.c, a.A, a.senses, a.b, a.lb, a.ub, kernels=kernels)
        if res.status != OPTIMAL:
            return RelaxationResult(res.status, None, np.inf, res.iterations)
        x = agg.expand(res.x, integral=False)
    else:
        a = to_arrays(model)
        res = solve_lp(a.c, a.A, a.senses, a.b, a.lb, a.ub, kernels=kernels)
        if res.status != OPTIMAL:
            return RelaxationResult(res.status, None, np.inf, res.iterations)
        x = res.x
    return RelaxationResult(OPTIMAL, x, model.objective_value(x), res.iterations)


def solve(
    model: MilpModel,
    *,
    presolve: bool = True,
    node_limit: int = 1_000_000,
    kernels=None,
) -> SolveResult:
    """Proven-optimal integer solution by best-bound branch-and-bound."""
    if presolve:
        agg = aggregate(model)
        if agg.infeasible:
            return SolveResult(INFEASIBLE, np.inf, None, 0, 0.0)
        a = agg.arrays
    else:
        agg = None
        a = to_arrays(model)
    res = branch_and_bound(a.c, a.A, a.senses, a.b, a.lb, a.ub, a.integer, node_limit=node_limit, kernels=kernels)
    if res.x is None:
        return SolveResult(res.status, np.inf, None, res.nodes, res.gap, res.lp_iterations)
    x = agg.expand(res.x) if agg is not None else res.x
    integer = np.array([v.kind != "continuous" for v in model.variables])
    x = np.where(integer & (np.abs(x - np.round(x)) <= INT_TOL), np.round(x), x)
    return SolveResult(res.status, model.objective_value(x), x, res.nodes, res.gap, res.lp_iterations)
