# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled rasterization kernel: curved-tube cell enumeration.

Must stay bit-identical to fallback.tube_cells; the test suite compares the
two backends cell for cell.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor

cnp.import_array()

BACKEND = "cython"

DEF SLACK = 1e-12


def tube_cells(prof, double delta, double h, Py_ssize_t M):
    """Flat cell indices hit by one curved tube (see fallback.tube_cells)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] p = np.ascontiguousarray(prof, dtype=np.float64)
    cdef Py_ssize_t n_hor = p.shape[1]
    if p.shape[0] != M:
        raise ValueError("profile must be sampled at every slab center")
    if n_hor < 1 or n_hor > 3:
        raise ValueError("compiled kernel supports ambient dimension 2..4")

    cdef double thr = delta * delta * (1.0 + SLACK)
    cdef Py_ssize_t w = <Py_ssize_t>floor(2.0 * delta / h) + 2
    cdef Py_ssize_t cap = M * w
    if n_hor >= 2:
        cap *= w
    if n_hor == 3:
        cap *= w
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out

    cdef Py_ssize_t i, l1, l2, l3, a1, a2, a3, n = 0
    cdef double p1, p2, p3, c1, c2, c3, d1, d2, d3
    cdef Py_ssize_t lo1, lo2, lo3

    if n_hor == 1:
        for i in range(M):
            p1 = p[i, 0]
            lo1 = <Py_ssize_t>ceil((p1 - delta + 1.0) / h - 0.5)
            for a1 in range(w):
                l1 = lo1 + a1
                if l1 < 0 or l1 >= M:
                    continue
                c1 = -1.0 + (l1 + 0.5) * h
                d1 = (c1 - p1) * (c1 - p1)
                if d1 <= thr:
                    o[n] = l1 * M + i
                    n += 1
    elif n_hor == 2:
        for i in range(M):
            p1 = p[i, 0]
            p2 = p[i, 1]
            lo1 = <Py_ssize_t>ceil((p1 - delta + 1.0) / h - 0.5)
            lo2 = <Py_ssize_t>ceil((p2 - delta + 1.0) / h - 0.5)
            for a1 in range(w):
                l1 = lo1 + a1
                if l1 < 0 or l1 >= M:
                    continue
                c1 = -1.0 + (l1 + 0.5) * h
                d1 = (c1 - p1) * (c1 - p1)
                for a2 in range(w):
                    l2 = lo2 + a2
                    if l2 < 0 or l2 >= M:
                        continue
                    c2 = -1.0 + (l2 + 0.5) * h
                    d2 = d1 + (c2 - p2) * (c2 - p2)
                    if d2 <= thr:
                        o[n] = (l1 * M + l2) * M + i
                        n += 1
    else:
        for i in range(M):
            p1 = p[i, 0]
            p2 = p[i, 1]
            p3 = p[i, 2]
            lo1 = <Py_ssize_t>ceil((p1 - delta + 1.0) / h - 0.5)
            lo2 = <Py_ssize_t>ceil((p2 - delta + 1.0) / h - 0.5)
            lo3 = <Py_ssize_t>ceil((p3 - delta + 1.0) / h - 0.5)
            for a1 in range(w):
                l1 = lo1 + a1
                if l1 < 0 or l1 >= M:
                    continue
                c1 = -1.0 + (l1 + 0.5) * h
                d1 = (c1 - p1) * (c1 - p1)
                for a2 in range(w):
                    l2 = lo2 + a2
                    if l2 < 0 or l2 >= M:
                        continue
                    c2 = -1.0 + (l2 + 0.5) * h
                    d2 = d1 + (c2 - p2) * (c2 - p2)
                    if d2 > thr:
                        continue
                    for a3 in range(w):
                        l3 = lo3 + a3
                        if l3 < 0 or l3 >= M:
                            continue
                        c3 = -1.0 + (l3 + 0.5) * h
                        d3 = d2 + (c3 - p3) * (c3 - p3)
                        if d3 <= thr:
                            o[n] = ((l1 * M + l2) * M + l3) * M + i
                            n += 1
    return out[:n].copy()
