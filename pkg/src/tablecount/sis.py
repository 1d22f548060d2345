"""Sequential importance sampling of contingency tables.

Tables are built one column at a time, columns taken in non-increasing order
of their sums. Three trial distributions are available:

* ``EC``: column probabilities proportional to the effective-columns count
  of what remains, Π_i C(r_i - x_i + α' - 1, α' - 1), with α' the effective
  column count of the columns still to come;
* ``GC``: the same form with α' equal to the number of remaining columns;
* ``GREEDY``: entries drawn one at a time from a two-row weight rule.

Every trial puts positive mass exactly on the tables with the right margins,
so the average of 1/q(X) is an unbiased estimate of Ω.
"""

from __future__ import annotations

import enum
import math
import os
import time
from dataclasses import dataclass
from typing import Iterator, Optional

import numba
import numpy as np

from . import _kernels as K
from .errors import Infeasible
from .exact import _bounded_compositions
from .linear import EPSILON
from .margins import LogCount, Margins, Method
from .special import ln_factorial, logsumexp

CHUNK = 8192


class TrialDistribution(str, enum.Enum):
    EC = "ec"
    GC = "gc"
    GREEDY = "greedy"


_KIND = {
    TrialDistribution.EC: K.KIND_EC,
    TrialDistribution.GC: K.KIND_GC,
    TrialDistribution.GREEDY: K.KIND_GREEDY,
}


@dataclass(frozen=True)
class SampledTable:
    entries: np.ndarray
    log_q: float


@dataclass
class SisRun:
    """Log importance weights ln(1/q(X)) from one sampling run."""

    log_weights: np.ndarray
    seed: int
    trial: TrialDistribution
    column_order: np.ndarray

    @property
    def iterations(self) -> int:
        return int(self.log_weights.size)

    @property
    def ln_estimate(self) -> float:
        return logsumexp(self.log_weights) - math.log(self.iterations)

    @property
    def std_err(self) -> float:
        """Delta-method standard error of ln Ω̂: sd(w) / (mean(w) √iters)."""
        lw = self.log_weights
        w = np.exp(lw - lw.max())
        mean = w.mean()
        sd = math.sqrt(max(float(np.mean((w - mean) ** 2)), 0.0))
        return float(sd / (mean * math.sqrt(lw.size)))

    @property
    def ess(self) -> float:
        """Effective sample size (Σw)² / Σw², from log weights."""
        lw = self.log_weights
        return math.exp(2.0 * logsumexp(lw) - logsumexp(2.0 * lw))

    def to_log_count(self) -> LogCount:
        return LogCount(self.ln_estimate, Method.SIS, self.std_err)


def _seed64(seed: int) -> np.uint64:
    return np.uint64(int(seed) % 2**64)


def column_order(margins: Margins) -> np.ndarray:
    """Stable permutation putting column sums in non-increasing order."""
    return np.argsort(-margins.c, kind="stable")


def lnfact_table(top: int) -> np.ndarray:
    return np.asarray(ln_factorial(np.arange(top + 1, dtype=np.float64)), dtype=np.float64)


def next_alpha(cols_rest, m: int, trial: TrialDistribution) -> float:
    """Trial parameter α' for the columns still to be sampled."""
    if trial is TrialDistribution.GC:
        return float(len(cols_rest))
    N = int(sum(cols_rest))
    c2 = int(sum(c * c for c in cols_rest))
    if c2 == N:
        return math.inf
    return (N * N - N + (N * N - c2) / m) / (c2 - N + EPSILON)


def _phi_tables(rows, cols, trial) -> np.ndarray:
    top = int(max(rows))
    phis = np.zeros((len(cols), top + 1))
    if trial is TrialDistribution.GREEDY:
        return phis
    lnf = lnfact_table(top)
    m = len(rows)
    for j in range(len(cols) - 1):
        alpha = next_alpha(cols[j + 1 :], m, trial)
        phis[j] = K.dm_weight_table(alpha, top, lnf)
    return phis


class _Prepared:
    def __init__(self, margins: Margins, trial: TrialDistribution):
        self.trial = TrialDistribution(trial)
        self.order = column_order(margins)
        self.rows = margins.r.copy()
        self.cols = margins.c[self.order].copy()
        self.phis = _phi_tables(self.rows, self.cols, self.trial)
        self.kind = _KIND[self.trial]


def _set_threads(threads: Optional[int]):
    if threads is None:
        env = os.environ.get("TABLECOUNT_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def run_sis(
    margins: Margins,
    trial: TrialDistribution = TrialDistribution.EC,
    iterations: int = 10_000,
    seed: int = 0,
    *,
    threads: Optional[int] = None,
    time_budget: Optional[float] = None,
    target_std_err: Optional[float] = None,
    progress=None,
) -> SisRun:
    """Draw ``iterations`` tables and keep their log importance weights.

    Iteration i always uses the random stream keyed by (seed, i), so the
    weights do not depend on chunking or thread count. ``time_budget`` (in
    seconds) and ``target_std_err`` allow stopping early at a chunk boundary.
    """
    if iterations < 2:
        raise ValueError("SIS needs at least two iterations")
    prep = _Prepared(margins, trial)
    _set_threads(threads)
    seed64 = _seed64(seed)
    started = time.perf_counter()
    chunks = []
    done = 0
    while done < iterations:
        count = min(CHUNK, iterations - done)
        lw = K.sis_log_weights(prep.rows, prep.cols, prep.kind, prep.phis, seed64, done, count)
        if np.isnan(lw).any():
            raise Infeasible("a column could not be completed")
        chunks.append(lw)
        done += count
        if progress is not None:
            progress(done, iterations)
        if done >= 2 and done < iterations:
            if time_budget is not None and time.perf_counter() - started > time_budget:
                break
            if target_std_err is not None:
                partial = SisRun(np.concatenate(chunks), int(seed), prep.trial, prep.order)
                if partial.std_err <= target_std_err:
                    break
    return SisRun(np.concatenate(chunks), int(seed), prep.trial, prep.order)


def estimate_count(
    margins: Margins,
    trial: TrialDistribution = TrialDistribution.EC,
    iterations: int = 10_000,
    seed: int = 0,
    threads: Optional[int] = None,
) -> LogCount:
    """ln Ω̂ with a delta-method standard error."""
    return run_sis(margins, trial, iterations, seed, threads=threads).to_log_count()


def sample_tables(
    margins: Margins,
    trial: TrialDistribution = TrialDistribution.EC,
    count: int = 1,
    seed: int = 0,
) -> Iterator[SampledTable]:
    """Yield tables with exact margins and their trial log-probabilities.

    Entries come back in the caller's column order. Resample in proportion to
    exp(-log_q) for asymptotically uniform draws.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    prep = _Prepared(margins, trial)
    inverse = np.argsort(prep.order, kind="stable")
    seed64 = _seed64(seed)
    done = 0
    while done < count:
        batch = min(CHUNK, count - done)
        tables, log_q = K.sis_tables(prep.rows, prep.cols, prep.kind, prep.phis, seed64, done, batch)
        if np.isnan(log_q).any():
            raise Infeasible("a column could not be completed")
        for t, lq in zip(tables, log_q):
            yield SampledTable(t[:, inverse], float(lq))
        done += batch


def importance_resample(tables, count: int, seed: int = 0) -> list:
    """Self-normalized importance resampling toward the uniform distribution."""
    tables = list(tables)
    lw = -np.array([t.log_q for t in tables])
    p = np.exp(lw - lw.max())
    p /= p.sum()
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(tables), size=count, p=p)
    return [tables[i] for i in idx]


# --- single-column interfaces ------------------------------------------------


def _phi(remaining_rows, alpha_next):
    top = int(max(remaining_rows)) if len(remaining_rows) else 0
    return K.dm_weight_table(float(alpha_next), top, lnfact_table(top))


def sample_column(remaining_rows, col_total: int, alpha_next: float, rng):
    """Draw one column under the effective-columns trial.

    ``rng`` is a :class:`numpy.random.Generator`; one 64-bit draw from it keys
    the column's random stream. Returns ``(column, log_prob)``.
    """
    R = np.asarray(remaining_rows, dtype=np.int64)
    if col_total < 0 or R.sum() < col_total:
        raise Infeasible(f"cannot place {col_total} into rows {R.tolist()}")
    key = np.uint64(int(rng.integers(0, 2**63)))
    out = np.empty(R.size, dtype=np.int64)
    log_prob, _ = K.dm_column(R, int(col_total), _phi(R, alpha_next), key, 0, out)
    return out, float(log_prob)


def greedy_column_entry(r1: int, r2: int, c1: int, N: int, k: int) -> int:
    """Unnormalized greedy weight for setting the current entry to k."""
    return int(K.greedy_weight(r1, r2, c1, N, k))


def column_log_prob(remaining_rows, column, alpha_next: float) -> float:
    """Trial log-probability of ``column``, normalized by full enumeration."""
    R = tuple(int(x) for x in remaining_rows)
    s = int(sum(column))
    phi = _phi(R, alpha_next)

    def ln_w(x):
        return float(sum(phi[ri - xi] for ri, xi in zip(R, x)))

    support = _bounded_compositions(s, R)
    return ln_w(column) - logsumexp([ln_w(x) for x in support])


def greedy_column_log_prob(remaining_rows, column) -> float:
    """Greedy trial log-probability of ``column``, normalized entry by entry."""
    R = [int(x) for x in remaining_rows]
    t = int(sum(column))
    total = sum(R)
    lp = 0.0
    for i in range(len(R) - 1):
        below = total - R[i]
        lo, hi = max(0, t - below), min(R[i], t)
        weights = {k: greedy_column_entry(R[i], R[i + 1], t, total, k) for k in range(lo, hi + 1)}
        lp += math.log(weights[int(column[i])] / sum(weights.values()))
        t -= int(column[i])
        total = below
    return lp


def table_log_q(margins: Margins, table, trial: TrialDistribution) -> float:
    """ln q(X) of a complete table under ``trial``, by direct enumeration.

    Independent of the compiled sampler; meant for small tables.
    """
    trial = TrialDistribution(trial)
    X = np.asarray(table, dtype=np.int64)
    order = column_order(margins)
    cols = [int(c) for c in margins.c[order]]
    R = [int(r) for r in margins.rows]
    lq = 0.0
    for step, j in enumerate(order):
        col = [int(v) for v in X[:, j]]
        if step < len(cols) - 1:
            if trial is TrialDistribution.GREEDY:
                lq += greedy_column_log_prob(R, col)
            else:
                alpha = next_alpha(cols[step + 1 :], margins.m, trial)
                lq += column_log_prob(R, col, alpha)
        R = [ri - xi for ri, xi in zip(R, col)]
    return lq
