# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simplex kernels. Must stay numerically identical to _pykernels."""

from libc.math cimport INFINITY, isinf


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t q):
    cdef Py_ssize_t rows = T.shape[0], cols = T.shape[1]
    cdef Py_ssize_t i, j
    cdef double p = T[r, q], f
    with nogil:
        for j in range(cols):
            T[r, j] = T[r, j] / p
        T[r, q] = 1.0
        for i in range(rows):
            if i == r:
                continue
            f = T[i, q]
            if f != 0.0:
                for j in range(cols):
                    T[i, j] = T[i, j] - f * T[r, j]
                T[i, q] = 0.0


def price(double[::1] d, signed char[::1] status, double tol, bint bland):
    cdef Py_ssize_t n = d.shape[0], j, best = -1
    cdef double score, best_score = tol
    cdef int direction = 0
    with nogil:
        for j in range(n):
            if status[j] == 1:
                score = -d[j]
            elif status[j] == 2:
                score = d[j]
            else:
                continue
            if score > best_score:
                best = j
                best_score = score
                if bland:
                    break
    if best >= 0:
        direction = 1 if status[best] == 1 else -1
    return best, direction


def ratio_test(double[:, ::1] T, Py_ssize_t q, double direction, double[::1] x,
               double[::1] lb, double[::1] ub, long[::1] basis, double tol, double piv_tol):
    cdef Py_ssize_t m = basis.shape[0], i, b, r = -1
    cdef double alpha, ratio, best = INFINITY
    cdef bint to_upper = False
    cdef long best_basis = -1
    # first pass: minimum ratio
    for i in range(m):
        alpha = T[i, q] * direction
        b = basis[i]
        if alpha > piv_tol:
            ratio = (x[b] - lb[b]) / alpha
        elif alpha < -piv_tol and not isinf(ub[b]):
            ratio = (ub[b] - x[b]) / (-alpha)
        else:
            continue
        if ratio < 0.0:
            ratio = 0.0
        if ratio < best:
            best = ratio
    if isinf(best):
        return -1, INFINITY, False
    # second pass: lowest basic index among ties
    for i in range(m):
        alpha = T[i, q] * direction
        b = basis[i]
        if alpha > piv_tol:
            ratio = (x[b] - lb[b]) / alpha
        elif alpha < -piv_tol and not isinf(ub[b]):
            ratio = (ub[b] - x[b]) / (-alpha)
        else:
            continue
        if ratio < 0.0:
            ratio = 0.0
        if ratio <= best + tol and (best_basis < 0 or b < best_basis):
            best_basis = b
            r = i
            to_upper = alpha < 0.0
    alpha = T[r, q] * direction
    b = basis[r]
    if alpha > 0.0:
        ratio = (x[b] - lb[b]) / alpha
    else:
        ratio = (ub[b] - x[b]) / (-alpha)
    if ratio < 0.0:
        ratio = 0.0
    return r, ratio, to_upper
