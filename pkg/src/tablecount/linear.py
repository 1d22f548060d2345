"""Closed-form O(m+n) estimates of ln Ω(r, c) and ln Ω₀(r, c).

Every function takes validated :class:`~tablecount.margins.Margins` and
returns a :class:`~tablecount.margins.LogCount`. Estimators never transpose
their input; callers wanting the "more rows than columns" orientation should
use :func:`orient`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateK, DomainError, GammaPole
from .exact import gale_ryser_feasible
from .margins import LogCount, Margins, Method
from .special import ln_abs_gbinom, ln_factorial, ln_gamma, ln_gbinom

EPSILON = 1e-9


@dataclass(frozen=True)
class EffectiveColumns:
    alpha: float
    epsilon: float = EPSILON


@dataclass(frozen=True)
class ZeroOneEffectiveColumns:
    alpha0: float
    epsilon: float = EPSILON


def _all_ones(values) -> bool:
    return all(v == 1 for v in values)


def alpha_c(margins: Margins, epsilon: float = EPSILON) -> EffectiveColumns:
    """Effective number of columns from matching row-sum covariances.

    All-ones columns give the α → ∞ limit directly; the regularized ratio
    would otherwise collapse to 0 at N = 1.
    """
    N, m, c2 = margins.N, margins.m, margins.c2
    if c2 == N:
        return EffectiveColumns(math.inf, epsilon)
    numer = N * N - N + (N * N - c2) / m
    return EffectiveColumns(numer / (c2 - N + epsilon), epsilon)


def alpha_c0(margins: Margins, epsilon: float = EPSILON) -> ZeroOneEffectiveColumns:
    """The 0-1 analogue of :func:`alpha_c`; may be any real number."""
    N, m, c2 = margins.N, margins.m, margins.c2
    numer = N * N - N - (N * N - c2) / m
    return ZeroOneEffectiveColumns(numer / (c2 - N + epsilon), epsilon)


def _ln_col_term(margins: Margins) -> float:
    """ln |A(c)| = Σ_j ln C(c_j + m - 1, m - 1)."""
    c = margins.c.astype(np.float64)
    m = margins.m
    return float(np.sum(ln_gbinom(c + m - 1, m - 1)))


def _ln_arrangements(margins: Margins) -> float:
    """ln(n! / Π r_i!), exact when every column sum is one."""
    return ln_factorial(margins.n) - float(np.sum(ln_factorial(margins.r)))


def ln_dirichlet_multinomial(rows: np.ndarray, alpha: float) -> float:
    """ln Pr(r | α): symmetric Dirichlet-multinomial mass of the row sums."""
    r = np.asarray(rows, dtype=np.float64)
    m = r.size
    N = float(r.sum())
    return float(np.sum(ln_gbinom(r + alpha - 1, alpha - 1))) - ln_gbinom(
        N + m * alpha - 1, m * alpha - 1
    )


def ec_estimate(margins: Margins) -> LogCount:
    """Effective-columns estimate."""
    if _all_ones(margins.cols):
        return LogCount(_ln_arrangements(margins), Method.EC)
    alpha = alpha_c(margins).alpha
    value = ln_dirichlet_multinomial(margins.r, alpha) + _ln_col_term(margins)
    return LogCount(value, Method.EC)


def ec_symmetrized(margins: Margins) -> LogCount:
    forward = ec_estimate(margins).ln_omega
    backward = ec_estimate(margins.transpose()).ln_omega
    return LogCount(0.5 * (forward + backward), Method.EC_SYM)


def gc_estimate(margins: Margins) -> LogCount:
    """Good-Crook: the effective-columns form with α fixed at n."""
    value = ln_dirichlet_multinomial(margins.r, float(margins.n)) + _ln_col_term(margins)
    return LogCount(value, Method.GC)


def gm_estimate(margins: Margins) -> LogCount:
    """Gail-Mantel multinormal moment-matching estimate."""
    m, N = margins.m, margins.N
    col_term = _ln_col_term(margins)
    if m == 1:
        return LogCount(col_term, Method.GM)
    sigma2 = (margins.c2 + m * N) * (m - 1) / ((m + 1) * m * m)
    Q = (m - 1) / (sigma2 * m) * (margins.r2 - N * N / m)
    value = (
        0.5 * (m - 1) * math.log((m - 1) / (2.0 * math.pi * m * sigma2))
        + 0.5 * math.log(m)
        - 0.5 * Q
        + col_term
    )
    return LogCount(value, Method.GM)


def de_estimate(margins: Margins) -> LogCount:
    """Diaconis-Efron polytope-volume estimate with edge correction."""
    m, n, N = margins.m, margins.n, margins.N
    w = N / (N + 0.5 * m * n)
    rbar = (1.0 - w) / m + w * margins.r / N
    cbar = (1.0 - w) / n + w * margins.c / N
    cbar2 = float(np.sum(cbar * cbar))
    K = (m + 1) / (m * cbar2) - 1.0 / m
    if not K > 0:
        raise DegenerateK(f"Diaconis-Efron parameter K = {K} is not positive")
    value = (
        (m - 1) * (n - 1) * math.log(N + 0.5 * m * n)
        + (K - 1.0) * float(np.sum(np.log(rbar)))
        + (m - 1) * float(np.sum(np.log(cbar)))
        + ln_gamma(m * K)
        - n * ln_gamma(float(m))
        - m * ln_gamma(K)
    )
    return LogCount(value, Method.DE)


def _ln_multinomial_base(margins: Margins) -> float:
    """ln N! / (Π r_i! Π c_j!)."""
    return (
        ln_factorial(margins.N)
        - float(np.sum(ln_factorial(margins.r)))
        - float(np.sum(ln_factorial(margins.c)))
    )


def _pair_sums(margins: Margins):
    return (
        sum(r * (r - 1) // 2 for r in margins.rows),
        sum(c * (c - 1) // 2 for c in margins.cols),
    )


def bbk_estimate(margins: Margins) -> LogCount:
    """Békéssy-Békéssy-Komlós sparse estimate."""
    rp, cp = _pair_sums(margins)
    N = margins.N
    value = _ln_multinomial_base(margins) + 2 * rp * cp / (N * N)
    return LogCount(value, Method.BBK)


def gmk_exponent_terms(margins: Margins) -> tuple:
    """The six correction terms of the Greenhill-McKay exponent, in order."""
    f = margins.falling
    R2, R3, C2, C3, N = f.R2, f.R3, f.C2, f.C3, margins.N
    return (
        R2 * C2 / (2 * N**2),
        R2 * C2 / (2 * N**3),
        R3 * C3 / (3 * N**3),
        -(R2 * C2 * (R2 + C2)) / (4 * N**4),
        -(R2 * R2 * C3 + R3 * C2 * C2) / (2 * N**4),
        R2 * R2 * C2 * C2 / (2 * N**5),
    )


def gmk_estimate(margins: Margins, n_terms: int = 6) -> LogCount:
    """Greenhill-McKay estimate; ``n_terms`` truncates the exponent."""
    terms = gmk_exponent_terms(margins)[:n_terms]
    return LogCount(_ln_multinomial_base(margins) + math.fsum(terms), Method.GMK)


def orient(margins: Margins) -> Margins:
    """Put the longer margin vector on the rows."""
    return margins.transpose() if margins.m < margins.n else margins


# --- 0-1 matrices ----------------------------------------------------------


def _infeasible(method: Method) -> LogCount:
    return LogCount(-math.inf, method)


def _ln_abs_ec0(margins: Margins, alpha0: float) -> float:
    m, N = margins.m, margins.N
    total = 0.0
    for a, b, sign in [(m * alpha0, N, -1.0)] + [(alpha0, r, 1.0) for r in margins.rows]:
        value, s = ln_abs_gbinom(a, b)
        if s == 0.0:
            if sign < 0:
                raise GammaPole(f"C({a:g}, {b}) vanishes in the denominator")
            raise GammaPole(f"C({a:g}, {b}) vanishes")
        total += sign * value
    return total + float(np.sum(ln_gbinom(float(m), margins.c.astype(np.float64))))


def ec0_estimate(margins: Margins) -> LogCount:
    """Effective-columns estimate for 0-1 tables (absolute value taken)."""
    if not gale_ryser_feasible(margins):
        return _infeasible(Method.EC0)
    if _all_ones(margins.cols):
        return LogCount(_ln_arrangements(margins), Method.EC0)
    alpha0 = alpha_c0(margins).alpha0
    try:
        value = _ln_abs_ec0(margins, alpha0)
    except GammaPole:
        bumped = alpha0 + EPSILON * max(1.0, abs(alpha0))
        value = _ln_abs_ec0(margins, bumped)
    return LogCount(value, Method.EC0)


def _ln_gc0(margins: Margins) -> float:
    m, n, N = margins.m, margins.n, margins.N
    if max(margins.rows) > n or max(margins.cols) > m:
        raise DomainError("0-1 binomials undefined: a margin exceeds the opposite dimension")
    return (
        float(np.sum(ln_gbinom(float(n), margins.r.astype(np.float64))))
        + float(np.sum(ln_gbinom(float(m), margins.c.astype(np.float64))))
        - ln_gbinom(float(m * n), float(N))
    )


def gc0_estimate(margins: Margins) -> LogCount:
    """Good-Crook 0-1 estimate, C(mn,N)^-1 Π C(n,r_i) Π C(m,c_j)."""
    if not gale_ryser_feasible(margins):
        return _infeasible(Method.GC0)
    return LogCount(_ln_gc0(margins), Method.GC0)


def bbk0_estimate(margins: Margins) -> LogCount:
    if not gale_ryser_feasible(margins):
        return _infeasible(Method.BBK0)
    rp, cp = _pair_sums(margins)
    N = margins.N
    value = _ln_multinomial_base(margins) - 2 * rp * cp / (N * N)
    return LogCount(value, Method.BBK0)


def gmw0_exponent_terms(margins: Margins) -> tuple:
    f = margins.falling
    R2, R3, C2, C3, N = f.R2, f.R3, f.C2, f.C3, margins.N
    return (
        -R2 * C2 / (2 * N**2),
        -R2 * C2 / (2 * N**3),
        R3 * C3 / (3 * N**3),
        -(R2 * C2 * (R2 + C2)) / (4 * N**4),
        -(R2 * R2 * C3 + R3 * C2 * C2) / (2 * N**4),
        R2 * R2 * C2 * C2 / (2 * N**5),
    )


def gmw0_estimate(margins: Margins, n_terms: int = 6) -> LogCount:
    """Greenhill-McKay-Wang sparse 0-1 estimate."""
    if not gale_ryser_feasible(margins):
        return _infeasible(Method.GMW0)
    terms = gmw0_exponent_terms(margins)[:n_terms]
    return LogCount(_ln_multinomial_base(margins) + math.fsum(terms), Method.GMW0)


def cgm0_correction(margins: Margins) -> float:
    """Exponent -½(1 - R/2Amn)(1 - C/2Amn) of the dense 0-1 estimate."""
    m, n, N = margins.m, margins.n, margins.N
    R = float(np.sum((margins.r - N / m) ** 2))
    C = float(np.sum((margins.c - N / n) ** 2))
    lam = N / (m * n)
    A = 0.5 * lam * (1.0 - lam)

    def ratio(dev):
        if dev == 0.0:
            return 0.0
        if A == 0.0:
            raise DomainError("dense 0-1 correction undefined at density 0 or 1")
        return dev / (2.0 * A * m * n)

    return -0.5 * (1.0 - ratio(R)) * (1.0 - ratio(C))


def cgm0_estimate(margins: Margins) -> LogCount:
    """Canfield-Greenhill-McKay dense 0-1 estimate."""
    if not gale_ryser_feasible(margins):
        return _infeasible(Method.CGM0)
    return LogCount(_ln_gc0(margins) + cgm0_correction(margins), Method.CGM0)


LINEAR_ESTIMATORS = {
    "ec": ec_estimate,
    "ec-sym": ec_symmetrized,
    "gc": gc_estimate,
    "gm": gm_estimate,
    "de": de_estimate,
    "bbk": bbk_estimate,
    "gmk": gmk_estimate,
}

ZERO_ONE_ESTIMATORS = {
    "ec0": ec0_estimate,
    "gc0": gc0_estimate,
    "bbk0": bbk0_estimate,
    "gmw0": gmw0_estimate,
    "cgm0": cgm0_estimate,
}
