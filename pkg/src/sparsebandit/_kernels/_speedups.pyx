# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same floating-point predicates as the numpy fallback."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


def greedy_pack(pool, double min_sep):
    """Greedy packing in pool order (see the fallback for the contract)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] arr = \
        np.ascontiguousarray(pool, dtype=np.float64)
    cdef Py_ssize_t m = arr.shape[0]
    cdef Py_ssize_t s = arr.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(m, dtype=np.int64)
    cdef double sep2 = min_sep * min_sep
    cdef Py_ssize_t n_acc = 0
    cdef Py_ssize_t i, j, l
    cdef double d2, diff
    cdef bint ok
    for i in range(m):
        ok = True
        for j in range(n_acc):
            d2 = 0.0
            for l in range(s):
                diff = arr[i, l] - arr[out[j], l]
                d2 += diff * diff
            if d2 < sep2:
                ok = False
                break
        if ok:
            out[n_acc] = i
            n_acc += 1
    return out[:n_acc].copy()


def pair_first_violation(P, W, alive, Py_ssize_t m_idx, Py_ssize_t t_idx,
                         double eps):
    """First violating tuple for the primary family (see the fallback)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] p_arr = \
        np.ascontiguousarray(P, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] w_arr = \
        np.ascontiguousarray(W, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] alive_arr = \
        np.ascontiguousarray(alive, dtype=np.uint8)
    cdef Py_ssize_t n_sub = p_arr.shape[0]
    cdef Py_ssize_t k = p_arr.shape[1]
    cdef Py_ssize_t n = p_arr.shape[2]
    cdef double h = 0.5 * eps
    cdef double thr = 2.5 * eps

    cdef cnp.ndarray[cnp.float64_t, ndim=1] c_lo = np.empty(k)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c_hi = np.empty(k)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] anyw = np.zeros(k, dtype=np.uint8)
    cdef Py_ssize_t x, w, mp, tp
    cdef double cw, u_x, val, dev
    cdef bint any_window = False

    for x in range(k):
        u_x = p_arr[m_idx, x, t_idx]
        c_lo[x] = INFINITY
        c_hi[x] = -INFINITY
        for w in range(n):
            cw = w_arr[w, t_idx]
            if fabs(u_x - cw) <= h:
                anyw[x] = 1
                if cw < c_lo[x]:
                    c_lo[x] = cw
                if cw > c_hi[x]:
                    c_hi[x] = cw
        if anyw[x]:
            any_window = True
    if not any_window:
        return None

    # Phase A + B fused: per rival candidate, find its earliest anchor and
    # keep the global minimum.
    cdef Py_ssize_t wstar = n
    for mp in range(n_sub):
        for tp in range(n):
            if not alive_arr[mp, tp]:
                continue
            if mp == m_idx and tp == t_idx:
                continue
            for x in range(k):
                if not anyw[x]:
                    continue
                val = p_arr[mp, x, tp]
                dev = fabs(val - c_lo[x])
                if fabs(val - c_hi[x]) > dev:
                    dev = fabs(val - c_hi[x])
                if dev <= thr:
                    continue
                u_x = p_arr[m_idx, x, t_idx]
                for w in range(wstar):
                    cw = w_arr[w, t_idx]
                    if fabs(u_x - cw) <= h and fabs(val - cw) > thr:
                        wstar = w
                        break
        if wstar == 0:
            break
    if wstar >= n:
        return None

    cw = w_arr[wstar, t_idx]
    for mp in range(n_sub):
        for tp in range(n):
            if not alive_arr[mp, tp]:
                continue
            if mp == m_idx and tp == t_idx:
                continue
            for x in range(k):
                u_x = p_arr[m_idx, x, t_idx]
                if fabs(u_x - cw) <= h and fabs(p_arr[mp, x, tp] - cw) > thr:
                    return (wstar, mp, tp, x)
    return None
