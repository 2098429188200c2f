"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

The event loop mirrors the compiled one operation for operation, so for a
given bit generator both produce identical floating-point results.
"""
import math

import numpy as np
from scipy.special import logsumexp

BACKEND = "python"

_CHUNK = 1 << 14


def log_convolve(a, b, n):
    """``out[k] = log sum_j exp(a[j] + b[k - j])`` for ``0 <= k < n``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = len(a), len(b)
    out = np.full(n, -np.inf)
    for k in range(n):
        jlo = max(0, k - nb + 1)
        jhi = min(k, na - 1)
        if jlo > jhi:
            continue
        terms = a[jlo:jhi + 1] + b[k - jhi:k - jlo + 1][::-1]
        out[k] = logsumexp(terms)
    return out


def gillespie_loop(class_count, lam, mu, m, burnin, events, bit_generator,
                   check_conservation=False):
    """Same contract as the compiled ``gillespie_loop``."""
    class_count = [int(c) for c in class_count]
    lam = [float(x) for x in lam]
    mu = [float(x) for x in mu]
    K = len(class_count)
    f = sum(class_count)
    offsets = [0] * K
    for k in range(1, K):
        offsets[k] = offsets[k - 1] + class_count[k - 1]
    length = [0] * f
    nz = [0] * f
    pos = [-1] * f
    nnz = [0] * K
    count = [[0] * (m + 1) for _ in range(K)]
    last = [[0.0] * (m + 1) for _ in range(K)]
    occ = [[0.0] * (m + 1) for _ in range(K)]
    pool = [0.0] * (m + 1)
    for k in range(K):
        count[k][0] = class_count[k]
    attach_w = 0.0
    for k in range(K):
        attach_w += lam[k] * class_count[k]

    gen = np.random.Generator(bit_generator)
    log = math.log
    M = m
    t = 0.0
    acc = False
    total = burnin + events
    buf = []
    bi = 0
    for ev in range(total):
        if ev == burnin:
            acc = True
            t = 0.0
        if bi >= len(buf):
            buf = gen.random(3 * min(_CHUNK, total - ev)).tolist()
            bi = 0
        u1, u2, u3 = buf[bi], buf[bi + 1], buf[bi + 2]
        bi += 3
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
            idx = int(u3 * class_count[k])
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
            idx = int(u3 * nnz[k])
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
            occ[k][l_old] += count[k][l_old] * (t - last[k][l_old])
            last[k][l_old] = t
            occ[k][l_new] += count[k][l_new] * (t - last[k][l_new])
            last[k][l_new] = t
        count[k][l_old] -= 1
        count[k][l_new] += 1
        if check_conservation:
            assert M + sum(length) == m, "monomer conservation violated"
            assert M >= 0
    for k in range(K):
        row_c, row_l, row_o = count[k], last[k], occ[k]
        for i in range(m + 1):
            row_o[i] += row_c[i] * (t - row_l[i])
    return np.array(pool), np.array(occ), t
