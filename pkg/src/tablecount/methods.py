"""String ids for every estimator, used by the CLI and the benchmark."""

from __future__ import annotations

from .exact import count_exact, count_exact_01, ln_count
from .linear import LINEAR_ESTIMATORS, ZERO_ONE_ESTIMATORS
from .margins import LogCount, Margins, Method
from .maxent import DEFAULT_MAX_ITER, DEFAULT_TOL, edgeworth_estimate, gaussian_estimate
from .sis import TrialDistribution, estimate_count


def exact_log_count(margins: Margins) -> LogCount:
    return LogCount(ln_count(count_exact(margins)), Method.EXACT)


def exact01_log_count(margins: Margins) -> LogCount:
    return LogCount(ln_count(count_exact_01(margins)), Method.EXACT01)


SIS_IDS = {"sis-ec": "ec", "sis-gc": "gc", "sis-greedy": "greedy"}
MAXENT_IDS = ("maxent-g", "maxent-e")

ALL_METHODS = (
    tuple(LINEAR_ESTIMATORS)
    + MAXENT_IDS
    + tuple(SIS_IDS)
    + ("exact",)
    + tuple(ZERO_ONE_ESTIMATORS)
    + ("exact01",)
)


def evaluate(
    method: str,
    margins: Margins,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    iters: int = 10_000,
    seed: int = 0,
) -> LogCount:
    """Run the estimator registered under ``method`` on ``margins``."""
    if method in LINEAR_ESTIMATORS:
        return LINEAR_ESTIMATORS[method](margins)
    if method in ZERO_ONE_ESTIMATORS:
        return ZERO_ONE_ESTIMATORS[method](margins)
    if method == "maxent-g":
        return gaussian_estimate(margins, tol, max_iter)
    if method == "maxent-e":
        return edgeworth_estimate(margins, tol, max_iter)
    if method in SIS_IDS:
        return estimate_count(margins, TrialDistribution(SIS_IDS[method]), iters, seed)
    if method == "exact":
        return exact_log_count(margins)
    if method == "exact01":
        return exact01_log_count(margins)
    raise KeyError(f"unknown method {method!r}; choose from {', '.join(ALL_METHODS)}")
