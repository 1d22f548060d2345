"""Compiled inner loops for sequential importance sampling.

Random numbers come from splitmix64 applied to (iteration key, counter), so
every iteration owns an independent stream and results do not depend on how
iterations are spread over threads.
"""

import math
import os

import numba
import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the TBB shipped here is too old for numba; skip probing it
    numba.config.THREADING_LAYER = "workqueue"

KIND_EC = 0
KIND_GC = 1
KIND_GREEDY = 2

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(cache=True)
def iteration_key(seed, iteration):
    return mix64(np.uint64(seed) ^ mix64(np.uint64(iteration) + _GOLDEN))


@numba.njit(cache=True)
def uniform(key, counter):
    z = mix64(key + np.uint64(counter) * _GOLDEN)
    return float(z >> _S11) * _INV53


@numba.njit(cache=True)
def _logaddexp(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@numba.njit(cache=True)
def dm_weight_table(alpha, top, lnfact):
    """phi[y] = ln C(y + α - 1, α - 1) - y ln α for y = 0..top.

    The subtracted y ln α is constant over columns with a fixed total, so it
    cancels on normalization and keeps huge α finite.
    """
    phi = np.empty(top + 1)
    acc = 0.0
    phi[0] = 0.0
    for y in range(1, top + 1):
        if alpha != np.inf:
            acc += math.log1p((y - 1) / alpha)
        phi[y] = acc - lnfact[y]
    return phi


@numba.njit(cache=True)
def dm_column(R, s, phi, key, counter, out):
    """Draw a column x (Σx = s, 0 <= x_i <= R_i) with P(x) ∝ Π phi(R_i - x_i).

    Backward pass builds T[k, t], the log total weight of rows k.. summing
    to t; the forward pass then samples each entry from its exact
    conditional. Returns (log probability, next counter).
    """
    m = R.shape[0]
    T = np.full((m + 1, s + 1), -np.inf)
    T[m, 0] = 0.0
    for k in range(m - 1, -1, -1):
        for t in range(s + 1):
            acc = -np.inf
            top = min(R[k], t)
            for x in range(top + 1):
                tail = T[k + 1, t - x]
                if tail != -np.inf:
                    acc = _logaddexp(acc, phi[R[k] - x] + tail)
            T[k, t] = acc
    if T[0, s] == -np.inf:
        return np.nan, counter
    log_prob = -T[0, s]
    t = s
    for k in range(m):
        top = min(R[k], t)
        if k == m - 1:
            x = t
        else:
            u = uniform(key, counter)
            counter += 1
            target = math.log(u) + T[k, t]
            acc = -np.inf
            x = -1
            last = -1
            for cand in range(top + 1):
                tail = T[k + 1, t - cand]
                if tail == -np.inf:
                    continue
                last = cand
                acc = _logaddexp(acc, phi[R[k] - cand] + tail)
                if acc >= target:
                    x = cand
                    break
            if x < 0:
                x = last
        out[k] = x
        log_prob += phi[R[k] - x]
        t -= x
    return log_prob, counter


@numba.njit(cache=True)
def greedy_weight(r1, r2, c1, N, k):
    return min(r2, c1 - k) + max(0, c1 + r1 + r2 - N - k) + 1


@numba.njit(cache=True)
def greedy_column(R, s, key, counter, out):
    """Draw a column entry by entry with the greedy two-row weight rule."""
    m = R.shape[0]
    below = 0
    for i in range(m):
        below += R[i]
    log_prob = 0.0
    t = s
    for i in range(m):
        total_here = below
        below -= R[i]
        if i == m - 1:
            out[i] = t
            break
        lo = max(0, t - below)
        hi = min(R[i], t)
        r2 = R[i + 1]
        norm = 0.0
        for k in range(lo, hi + 1):
            norm += greedy_weight(R[i], r2, t, total_here, k)
        if hi > lo:
            u = uniform(key, counter)
            counter += 1
            target = u * norm
            acc = 0.0
            x = hi
            for k in range(lo, hi + 1):
                acc += greedy_weight(R[i], r2, t, total_here, k)
                if acc >= target:
                    x = k
                    break
            log_prob += math.log(greedy_weight(R[i], r2, t, total_here, x) / norm)
        else:
            x = lo
        out[i] = x
        t -= x
    return log_prob, counter


@numba.njit(cache=True)
def _one_table(rows, cols, kind, phis, key, table):
    m = rows.shape[0]
    n = cols.shape[0]
    R = rows.copy()
    col = np.empty(m, dtype=np.int64)
    log_q = 0.0
    counter = 0
    for j in range(n):
        if j == n - 1:
            for i in range(m):
                col[i] = R[i]
            lp = 0.0
        elif kind == KIND_GREEDY:
            lp, counter = greedy_column(R, cols[j], key, counter, col)
        else:
            lp, counter = dm_column(R, cols[j], phis[j], key, counter, col)
        if np.isnan(lp):
            return np.nan
        log_q += lp
        for i in range(m):
            table[i, j] = col[i]
            R[i] -= col[i]
    return log_q


@numba.njit(cache=True, parallel=True)
def sis_log_weights(rows, cols, kind, phis, seed, start, count):
    """ln(1/q(X)) for iterations start .. start+count-1."""
    out = np.empty(count)
    m = rows.shape[0]
    n = cols.shape[0]
    for it in numba.prange(count):
        table = np.empty((m, n), dtype=np.int64)
        key = iteration_key(seed, start + it)
        out[it] = -_one_table(rows, cols, kind, phis, key, table)
    return out


@numba.njit(cache=True)
def sis_tables(rows, cols, kind, phis, seed, start, count):
    m = rows.shape[0]
    n = cols.shape[0]
    tables = np.empty((count, m, n), dtype=np.int64)
    log_q = np.empty(count)
    for it in range(count):
        key = iteration_key(seed, start + it)
        log_q[it] = _one_table(rows, cols, kind, phis, key, tables[it])
    return tables, log_q
