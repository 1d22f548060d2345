"""Exact table counts at desk scale.

Both counters run a dynamic program over columns whose state is the vector of
residual row sums. Only the multiset of residuals matters, so states are kept
sorted in descending order, which merges many otherwise distinct states.
"""

from __future__ import annotations

import math
from collections import defaultdict
from functools import lru_cache
from itertools import combinations

from .errors import TooLarge
from .margins import Margins

STATE_GUARD = 10**7


def _guard(rows, limit):
    size = 1
    for r in rows:
        size *= r + 1
    if size > limit:
        raise TooLarge(f"state space bound {size} exceeds {limit}")


def _canon(state):
    return tuple(sorted(state, reverse=True))


@lru_cache(maxsize=None)
def _bounded_compositions(total, bounds):
    """All vectors x with Σx = total and 0 <= x_i <= bounds_i."""
    if not bounds:
        return ((),) if total == 0 else ()
    head, rest = bounds[0], bounds[1:]
    rest_cap = sum(rest)
    out = []
    for x in range(max(0, total - rest_cap), min(head, total) + 1):
        for tail in _bounded_compositions(total - x, rest):
            out.append((x,) + tail)
    return tuple(out)


def count_exact(margins: Margins, limit: int = STATE_GUARD) -> int:
    """Ω(r, c), the number of non-negative integer tables with these margins."""
    _guard(margins.rows, limit)
    states = {_canon(margins.rows): 1}
    for cj in sorted(margins.cols, reverse=True):
        nxt = defaultdict(int)
        for state, count in states.items():
            for x in _bounded_compositions(cj, state):
                nxt[_canon(s - xi for s, xi in zip(state, x))] += count
        states = nxt
    return sum(states.values())


def count_exact_01(margins: Margins, limit: int = STATE_GUARD) -> int:
    """Ω₀(r, c), the number of 0-1 tables with these margins."""
    _guard([min(r, margins.n) for r in margins.rows], limit)
    states = {_canon(margins.rows): 1}
    for cj in sorted(margins.cols, reverse=True):
        nxt = defaultdict(int)
        for state, count in states.items():
            live = [i for i, s in enumerate(state) if s > 0]
            for chosen in combinations(live, cj):
                new = list(state)
                for i in chosen:
                    new[i] -= 1
                nxt[_canon(new)] += count
        states = nxt
    return sum(states.values())


def gale_ryser_feasible(margins: Margins) -> bool:
    """True iff some 0-1 matrix has these margins."""
    rows = sorted(margins.rows, reverse=True)
    if rows[0] > margins.n:
        return False
    prefix = 0
    for k, r in enumerate(rows, start=1):
        prefix += r
        if prefix > sum(min(c, k) for c in margins.cols):
            return False
    return True


def ln_count(count: int) -> float:
    """Natural log of an exact (possibly huge) integer count."""
    if count <= 0:
        return -math.inf
    return math.log(count)
