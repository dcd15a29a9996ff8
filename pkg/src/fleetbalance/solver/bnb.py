"""Best-bound branch-and-bound over the bounded simplex."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from fleetbalance.solver.simplex import solve_lp

INT_TOL = 1e-6


@dataclass
class BnBResult:
    status: str  # "optimal" | "infeasible" | "iteration-limit"
    x: np.ndarray | None
    objective: float
    nodes: int
    gap: float
    lp_iterations: int


def _most_fractional(x: np.ndarray, integer: np.ndarray) -> int:
    frac = np.abs(x - np.round(x))
    frac[~integer] = 0.0
    # distance to 0.5 ranks fractionality; argmax keeps the lowest index on ties
    score = np.where(frac > INT_TOL, 0.5 - np.abs(x - np.floor(x) - 0.5), -1.0)
    j = int(np.argmax(score))
    return j if score[j] >= 0 else -1


def branch_and_bound(
    c: np.ndarray,
    A: np.ndarray,
    senses: np.ndarray,
    b: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    integer: np.ndarray,
    *,
    node_limit: int = 1_000_000,
    kernels=None,
) -> BnBResult:
    """Minimize over integer points; the LP bound of each node is computed on creation."""
    integer = np.asarray(integer, dtype=bool)
    lb = np.asarray(lb, dtype=float).copy()
    ub = np.asarray(ub, dtype=float).copy()
    lb[integer] = np.ceil(lb[integer] - INT_TOL)
    ub[integer] = np.floor(ub[integer] + INT_TOL)

    counter = itertools.count()
    nodes = 0
    lp_iters = 0
    best_x: np.ndarray | None = None
    best_obj = np.inf
    heap: list = []

    def evaluate(node_lb, node_ub):
        nonlocal nodes, lp_iters
        nodes += 1
        res = solve_lp(c, A, senses, b, node_lb, node_ub, kernels=kernels)
        lp_iters += res.iterations
        return res

    def cutoff() -> float:
        # nodes whose bound reaches this cannot beat the incumbent
        if best_x is None:
            return np.inf
        return best_obj - 1e-9 * max(1.0, abs(best_obj))

    def push(res, node_lb, node_ub):
        nonlocal best_x, best_obj
        if res.status != "optimal" or res.objective >= cutoff():
            return
        j = _most_fractional(res.x, integer)
        if j < 0:
            x = res.x.copy()
            x[integer] = np.round(x[integer])
            best_x, best_obj = x, float(c @ x)
            return
        heapq.heappush(heap, (res.objective, next(counter), node_lb, node_ub, res.x, j))

    root = evaluate(lb, ub)
    if root.status == "iteration-limit":
        return BnBResult("iteration-limit", None, np.inf, nodes, np.inf, lp_iters)
    push(root, lb, ub)

    while heap:
        bound, _, node_lb, node_ub, x, j = heapq.heappop(heap)
        if bound >= cutoff():
            continue
        if nodes >= node_limit:
            heapq.heappush(heap, (bound, -1, node_lb, node_ub, x, j))
            break
        v = x[j]
        down_ub = node_ub.copy()
        down_ub[j] = np.floor(v)
        up_lb = node_lb.copy()
        up_lb[j] = np.ceil(v)
        for child_lb, child_ub in ((node_lb, down_ub), (up_lb, node_ub)):
            if child_lb[j] > child_ub[j]:
                continue
            push(evaluate(child_lb, child_ub), child_lb, child_ub)

    open_bounds = [h[0] for h in heap if h[0] < cutoff()]
    if open_bounds:
        gap = best_obj - min(open_bounds) if best_x is not None else np.inf
        return BnBResult("iteration-limit", best_x, best_obj, nodes, gap, lp_iters)
    if best_x is None:
        return BnBResult("infeasible", None, np.inf, nodes, 0.0, lp_iters)
    return BnBResult("optimal", best_x, best_obj, nodes, 0.0, lp_iters)
