"""Exact solution of relocation models and plan extraction."""

from fleetbalance.solver.core import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    RelaxationResult,
    SolveResult,
    solve,
    solve_lp_relaxation,
)
from fleetbalance.solver.kernels import BACKEND
from fleetbalance.solver.oracle import InstanceTooLarge, brute_force, brute_force_optima
from fleetbalance.solver.plan import Move, Plan, PlanError, extract_plan, make_plan, plan_violations

__all__ = [
    "BACKEND",
    "INFEASIBLE",
    "ITERATION_LIMIT",
    "OPTIMAL",
    "InstanceTooLarge",
    "Move",
    "Plan",
    "PlanError",
    "RelaxationResult",
    "SolveResult",
    "brute_force",
    "brute_force_optima",
    "extract_plan",
    "make_plan",
    "plan_violations",
    "solve",
    "solve_lp_relaxation",
]
