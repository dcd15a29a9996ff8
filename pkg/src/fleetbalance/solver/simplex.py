"""Dense bounded-variable primal simplex (two phases).

Variables carry explicit bounds ``lb <= x <= ub``; nonbasic variables sit at
one of their bounds, so binary columns never need extra rows. Pricing is
Dantzig's rule with lowest-index ties, switching to Bland's rule after a run
of degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fleetbalance.solver import kernels as _kernels

AT_BASIC, AT_LOWER, AT_UPPER, FIXED = 0, 1, 2, 3

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_RUN = 50


class SimplexError(RuntimeError):
    """Internal failure: unbounded ray or numerical breakdown."""


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "iteration-limit"
    x: np.ndarray | None
    objective: float
    iterations: int


class _Tableau:
    def __init__(self, A, b, c, lb, ub, kernels):
        self.A = A
        self.b = b
        self.c = c
        self.lb = lb
        self.ub = ub
        self.k = kernels
        self.iterations = 0

    def setup(self, x, basis, status, T):
        self.x, self.basis, self.status, self.T = x, basis, status, T

    def set_costs(self, cost):
        m = self.basis.shape[0]
        self.cost = cost
        self.T[m, :] = cost - cost[self.basis] @ self.T[:m, :]

    def iterate(self, max_iter: int) -> str:
        m = self.basis.shape[0]
        T, x, lb, ub, basis, status = self.T, self.x, self.lb, self.ub, self.basis, self.status
        bland = False
        degenerate = 0
        while True:
            if self.iterations >= max_iter:
                return "iteration-limit"
            q, direction = self.k.price(T[m], status, OPT_TOL, bland)
            if q < 0:
                return "optimal"
            self.iterations += 1
            r, theta, to_upper = self.k.ratio_test(T, q, float(direction), x, lb, ub, basis, FEAS_TOL, PIVOT_TOL)
            span = ub[q] - lb[q]
            if span <= theta:
                # bound flip, basis unchanged
                theta = span
                r = -1
            if np.isinf(theta):
                raise SimplexError(f"unbounded direction on column {q}")
            if theta <= FEAS_TOL:
                degenerate += 1
                if degenerate > DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
            if theta > 0:
                x[basis] -= (theta * direction) * T[:m, q]
                x[q] += theta * direction
            if r < 0:
                status[q] = AT_UPPER if direction > 0 else AT_LOWER
                x[q] = ub[q] if direction > 0 else lb[q]
                continue
            leaving = basis[r]
            x[leaving] = ub[leaving] if to_upper else lb[leaving]
            status[leaving] = AT_UPPER if to_upper else AT_LOWER
            if lb[leaving] == ub[leaving]:
                status[leaving] = FIXED
            basis[r] = q
            status[q] = AT_BASIC
            self.k.pivot(T, r, q)

    def refine(self):
        """Recompute basic values from the original rows to shed drift."""
        m = self.basis.shape[0]
        if m == 0:
            return
        nonbasic = self.status != AT_BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        B = self.A[:, self.basis]
        try:
            self.x[self.basis] = np.linalg.solve(B, rhs)
        except np.linalg.LinAlgError:
            pass


def solve_lp(
    c: np.ndarray,
    A: np.ndarray,
    senses: np.ndarray,
    b: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    *,
    kernels=None,
    max_iter: int = 100_000,
) -> LPResult:
    """Minimize ``c @ x`` subject to ``A x (senses) b`` and ``lb <= x <= ub``.

    ``senses`` holds -1 for <=, 0 for =, +1 for >=. Lower bounds must be
    finite; upper bounds may be ``inf``.
    """
    kernels = kernels or _kernels.default
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    senses = np.asarray(senses, dtype=int)
    if np.any(lb > ub + FEAS_TOL):
        return LPResult("infeasible", None, np.inf, 0)
    if np.any(np.isinf(lb)):
        raise ValueError("lower bounds must be finite")

    ineq = np.flatnonzero(senses != 0)
    n_slack = ineq.size
    slack_cols = np.zeros((m, n_slack))
    slack_cols[ineq, np.arange(n_slack)] = -senses[ineq]  # +1 for <=, -1 for >=

    x0 = lb.copy()
    resid = b - A @ x0
    basis = np.empty(m, dtype=np.int64)
    row_sign = np.ones(m)
    art_rows = []
    slack_of_row = {int(r): s for s, r in enumerate(ineq)}
    for r in range(m):
        s = slack_of_row.get(r)
        if s is not None and resid[r] * slack_cols[r, s] >= 0:
            basis[r] = n + s
            row_sign[r] = slack_cols[r, s]
        else:
            art_rows.append(r)
            row_sign[r] = 1.0 if resid[r] >= 0 else -1.0
    n_art = len(art_rows)
    N = n + n_slack + n_art
    full = np.zeros((m, N))
    full[:, :n] = A
    full[:, n : n + n_slack] = slack_cols
    for a, r in enumerate(art_rows):
        full[r, n + n_slack + a] = row_sign[r]
        basis[r] = n + n_slack + a

    lb_all = np.concatenate([lb, np.zeros(n_slack + n_art)])
    ub_all = np.concatenate([ub, np.full(n_slack, np.inf), np.full(n_art, np.inf)])
    x = np.concatenate([x0, np.zeros(n_slack + n_art)])
    x[basis] = resid * row_sign

    T = np.zeros((m + 1, N))
    T[:m, :] = full * row_sign[:, None]
    status = np.full(N, AT_LOWER, dtype=np.int8)
    status[lb_all == ub_all] = FIXED
    status[basis] = AT_BASIC

    tab = _Tableau(full, b, None, lb_all, ub_all, kernels)
    tab.setup(x, basis, status, T)

    if n_art:
        phase1 = np.zeros(N)
        phase1[n + n_slack :] = 1.0
        tab.set_costs(phase1)
        state = tab.iterate(max_iter)
        if state == "iteration-limit":
            return LPResult(state, None, np.inf, tab.iterations)
        tab.refine()
        infeas = float(x[n + n_slack :].sum())
        if infeas > 1e-7 * (1.0 + float(np.abs(b).max(initial=0.0))):
            return LPResult("infeasible", None, np.inf, tab.iterations)
        # artificials are pinned at zero for phase 2
        art = np.arange(n + n_slack, N)
        ub_all[art] = 0.0
        x[art] = np.where(status[art] == AT_BASIC, x[art], 0.0)
        status[art[status[art] != AT_BASIC]] = FIXED

    cost = np.concatenate([c, np.zeros(n_slack + n_art)])
    tab.set_costs(cost)
    state = tab.iterate(max_iter)
    if state == "iteration-limit":
        return LPResult(state, None, np.inf, tab.iterations)
    tab.refine()
    xs = x[:n].copy()
    return LPResult("optimal", xs, float(c @ xs), tab.iterations)
