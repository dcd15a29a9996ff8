"""Pure numpy simplex kernels, used when the compiled module is unavailable.

Tie-breaking and arithmetic order mirror ``_ckernels.pyx`` so both backends
follow the same pivot sequence.
"""

import numpy as np


def pivot(T: np.ndarray, r: int, q: int) -> None:
    T[r, :] /= T[r, q]
    T[r, q] = 1.0
    col = T[:, q].copy()
    col[r] = 0.0
    nz = np.flatnonzero(col)
    if nz.size:
        T[nz, :] -= np.outer(col[nz], T[r, :])
        T[nz, q] = 0.0


def price(d: np.ndarray, status: np.ndarray, tol: float, bland: bool) -> tuple[int, int]:
    score = np.where(status == 1, -d, np.where(status == 2, d, -np.inf))
    cand = np.flatnonzero(score > tol)
    if cand.size == 0:
        return -1, 0
    q = int(cand[0]) if bland else int(np.argmax(score))
    return q, (1 if status[q] == 1 else -1)


def ratio_test(T, q, direction, x, lb, ub, basis, tol, piv_tol):
    alpha = T[: basis.shape[0], q] * direction
    xb, lo, hi = x[basis], lb[basis], ub[basis]
    ratio = np.full(alpha.shape, np.inf)
    dec = alpha > piv_tol
    inc = (alpha < -piv_tol) & ~np.isinf(hi)
    ratio[dec] = (xb[dec] - lo[dec]) / alpha[dec]
    ratio[inc] = (hi[inc] - xb[inc]) / (-alpha[inc])
    ratio = np.maximum(ratio, 0.0)
    best = ratio.min() if ratio.size else np.inf
    if np.isinf(best):
        return -1, np.inf, False
    ties = np.flatnonzero((dec | inc) & (ratio <= best + tol))
    r = int(ties[np.argmin(basis[ties])])
    return r, float(ratio[r]), bool(alpha[r] < 0.0)
