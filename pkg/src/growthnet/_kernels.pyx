# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: log-domain convolution and the CTMC event loop.

Must stay numerically interchangeable with ``_fallback.py``; the event loop
consumes exactly three uniforms per event in the same order so both backends
produce bit-identical trajectories for a given bit generator state.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t

cnp.import_array()

BACKEND = "cython"


def log_convolve(const double[::1] a, const double[::1] b, Py_ssize_t n):
    """``out[k] = log sum_j exp(a[j] + b[k - j])`` for ``0 <= k < n``."""
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    cdef Py_ssize_t k, j, jlo, jhi
    cdef double mx, s, v
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for k in range(n):
            jlo = k - nb + 1
            if jlo < 0:
                jlo = 0
            jhi = k
            if jhi > na - 1:
                jhi = na - 1
            mx = -INFINITY
            for j in range(jlo, jhi + 1):
                v = a[j] + b[k - j]
                if v > mx:
                    mx = v
            if mx == -INFINITY:
                out[k] = -INFINITY
                continue
            s = 0.0
            for j in range(jlo, jhi + 1):
                s += exp(a[j] + b[k - j] - mx)
            out[k] = mx + log(s)
    return out_arr


def gillespie_loop(const cnp.int64_t[::1] class_count, const double[::1] lam, const double[::1] mu,
                   Py_ssize_t m, long long burnin, long long events, bit_generator):
    """Run the attach/detach chain from the all-free state.

    Returns ``(pool_time, class_time, total_time)`` where ``pool_time[n]`` is
    the time spent with ``n`` free monomers and ``class_time[k, l]`` is the
    summed time filaments of class ``k`` spent at length ``l``.
    """
    cdef Py_ssize_t K = class_count.shape[0]
    cdef Py_ssize_t f = 0, k, i, idx, off, l_old, l_new
    for k in range(K):
        f += class_count[k]

    capsule = bit_generator.capsule
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    offsets_arr = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] offsets = offsets_arr
    for k in range(1, K):
        offsets[k] = offsets[k - 1] + class_count[k - 1]

    length_arr = np.zeros(f, dtype=np.int64)
    nz_arr = np.zeros(f, dtype=np.int64)      # per-class lists of nonempty filaments
    pos_arr = np.full(f, -1, dtype=np.int64)  # position of a filament in its list
    nnz_arr = np.zeros(K, dtype=np.int64)
    count_arr = np.zeros((K, m + 1), dtype=np.int64)
    last_arr = np.zeros((K, m + 1), dtype=np.float64)
    occ_arr = np.zeros((K, m + 1), dtype=np.float64)
    pool_arr = np.zeros(m + 1, dtype=np.float64)
    cdef cnp.int64_t[::1] length = length_arr
    cdef cnp.int64_t[::1] nz = nz_arr
    cdef cnp.int64_t[::1] pos = pos_arr
    cdef cnp.int64_t[::1] nnz = nnz_arr
    cdef cnp.int64_t[:, ::1] count = count_arr
    cdef double[:, ::1] last = last_arr
    cdef double[:, ::1] occ = occ_arr
    cdef double[::1] pool = pool_arr
    for k in range(K):
        count[k, 0] = class_count[k]

    cdef double attach_w = 0.0
    for k in range(K):
        attach_w += lam[k] * class_count[k]

    cdef Py_ssize_t M = m
    cdef double t = 0.0, dt, u1, u2, u3, attach_rate, detach_rate, R, r, w
    cdef long long ev, total = burnin + events
    cdef bint acc = 0
    cdef int n_pick

    with nogil:
        for ev in range(total):
            if ev == burnin:
                acc = 1
                t = 0.0
            u1 = rng.next_double(rng.state)
            u2 = rng.next_double(rng.state)
            u3 = rng.next_double(rng.state)
            attach_rate = M * attach_w
            detach_rate = 0.0
            for k in range(K):
                detach_rate += mu[k] * nnz[k]
            R = attach_rate + detach_rate
            dt = -log(1.0 - u1) / R
            if acc:
                pool[M] += dt
                t += dt
            r = u2 * R
            if r < attach_rate:
                k = 0
                w = M * lam[0] * class_count[0]
                while r >= w and k < K - 1:
                    r -= w
                    k += 1
                    w = M * lam[k] * class_count[k]
                idx = <Py_ssize_t>(u3 * class_count[k])
                if idx >= class_count[k]:
                    idx = class_count[k] - 1
                i = offsets[k] + idx
                l_old = length[i]
                l_new = l_old + 1
                length[i] = l_new
                M -= 1
                if l_old == 0:
                    off = offsets[k]
                    nz[off + nnz[k]] = i
                    pos[i] = nnz[k]
                    nnz[k] += 1
            else:
                r -= attach_rate
                k = -1
                for n_pick in range(K):
                    if nnz[n_pick] > 0:
                        k = n_pick
                        w = mu[n_pick] * nnz[n_pick]
                        if r < w:
                            break
                        r -= w
                idx = <Py_ssize_t>(u3 * nnz[k])
                if idx >= nnz[k]:
                    idx = nnz[k] - 1
                off = offsets[k]
                i = nz[off + idx]
                l_old = length[i]
                l_new = l_old - 1
                length[i] = l_new
                M += 1
                if l_new == 0:
                    idx = pos[i]
                    nnz[k] -= 1
                    nz[off + idx] = nz[off + nnz[k]]
                    pos[nz[off + idx]] = idx
                    pos[i] = -1
            if acc:
                occ[k, l_old] += count[k, l_old] * (t - last[k, l_old])
                last[k, l_old] = t
                occ[k, l_new] += count[k, l_new] * (t - last[k, l_new])
                last[k, l_new] = t
            count[k, l_old] -= 1
            count[k, l_new] += 1
        for k in range(K):
            for i in range(m + 1):
                occ[k, i] += count[k, i] * (t - last[k, i])
    return pool_arr, occ_arr, t
