# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: sliding range maxima and brute-force kernel sums.

Same contracts as the NumPy versions in ``_fallback.py``.
"""

import numpy as np

from cython.parallel cimport parallel, prange
from libc.math cimport INFINITY
from libc.stdint cimport int64_t
from libc.stdlib cimport free, malloc


def range_max(values, lo, hi):
    """Row-wise maxima over nondecreasing index windows (monotone deque)."""
    cdef const double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const int64_t[::1] lo_ = np.ascontiguousarray(lo, dtype=np.int64)
    cdef const int64_t[::1] hi_ = np.ascontiguousarray(hi, dtype=np.int64)
    cdef Py_ssize_t rows = v.shape[0], cols = v.shape[1], nx = lo_.shape[0]
    out_arr = np.empty((rows, nx), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef int64_t* dq
    cdef Py_ssize_t r, x, head, tail, nxt
    if rows == 0 or nx == 0:
        return out_arr
    dq = <int64_t*> malloc((cols + 1) * sizeof(int64_t))
    if dq == NULL:
        raise MemoryError()
    with nogil:
        for r in range(rows):
            head = 0
            tail = 0
            nxt = 0
            for x in range(nx):
                while nxt <= hi_[x] and nxt < cols:
                    while tail > head and v[r, dq[tail - 1]] <= v[r, nxt]:
                        tail -= 1
                    dq[tail] = nxt
                    tail += 1
                    nxt += 1
                while tail > head and dq[head] < lo_[x]:
                    head += 1
                if tail > head and lo_[x] <= hi_[x]:
                    out[r, x] = v[r, dq[head]]
                else:
                    out[r, x] = -INFINITY
    free(dq)
    return out_arr


cdef inline void _shift_index(int64_t* idx, int64_t* x, Py_ssize_t npts,
                              int size, int dim) noexcept nogil:
    cdef Py_ssize_t d, rem, flat, a, c, stride
    for d in range(npts):
        rem = d
        flat = 0
        stride = 1
        for a in range(dim - 1, -1, -1):
            c = rem % size
            rem = rem // size
            flat = flat + ((c + x[a]) % size) * stride
            stride = stride * size
        idx[d] = flat


def mfi_contract(funcs, table, eval_coords, int size, int dim, int threads=1):
    """Kernel sum ``sum_d prod_i F_i[x + d_i] W[d]`` for m in {1, 2, 3}."""
    cdef const double[:, ::1] f = np.ascontiguousarray(funcs, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(table, dtype=np.float64).ravel()
    cdef const int64_t[:, ::1] xs = np.ascontiguousarray(eval_coords, dtype=np.int64)
    cdef Py_ssize_t m = f.shape[0], npts = f.shape[1], nx = xs.shape[0]
    if m < 1 or m > 3:
        raise ValueError("compiled contraction supports 1 <= m <= 3")
    if w.shape[0] != npts ** m:
        raise ValueError("kernel table size does not match the domain")
    out_arr = np.zeros(nx, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef int64_t* idx
    cdef double* buf
    cdef int64_t* xc
    cdef Py_ssize_t j, a, d1, d2, d3, base1, base2
    cdef double acc, a1, a2, inner, inner2
    if dim > 8:
        raise ValueError("dimension too large")
    if threads < 1:
        threads = 1
    with nogil, parallel(num_threads=threads):
        idx = <int64_t*> malloc((npts + 8) * sizeof(int64_t))
        xc = idx + npts
        buf = <double*> malloc(3 * npts * sizeof(double))
        for j in prange(nx, schedule="static"):
            for a in range(dim):
                xc[a] = xs[j, a]
            _shift_index(idx, xc, npts, size, dim)
            for a in range(m):
                for d1 in range(npts):
                    buf[a * npts + d1] = f[a, idx[d1]]
            acc = 0.0
            if m == 1:
                for d1 in range(npts):
                    acc = acc + w[d1] * buf[d1]
            elif m == 2:
                for d1 in range(npts):
                    a1 = buf[d1]
                    if a1 == 0.0:
                        continue
                    base1 = d1 * npts
                    inner = 0.0
                    for d2 in range(npts):
                        inner = inner + w[base1 + d2] * buf[npts + d2]
                    acc = acc + a1 * inner
            else:
                for d1 in range(npts):
                    a1 = buf[d1]
                    if a1 == 0.0:
                        continue
                    inner = 0.0
                    for d2 in range(npts):
                        a2 = buf[npts + d2]
                        if a2 == 0.0:
                            continue
                        base2 = (d1 * npts + d2) * npts
                        inner2 = 0.0
                        for d3 in range(npts):
                            inner2 = inner2 + w[base2 + d3] * buf[2 * npts + d3]
                        inner = inner + a2 * inner2
                    acc = acc + a1 * inner
            out[j] = acc
        free(idx)
        free(buf)
    return out_arr
