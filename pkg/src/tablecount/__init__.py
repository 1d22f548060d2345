"""Estimate, count and sample non-negative integer matrices with fixed margins."""

from .bench import (
    ErrorRecord,
    GridSpec,
    MarginGenerator,
    Scheme,
    TruthPolicy,
    generate_margins,
    run_grid,
    summarize,
)
from .errors import (
    DegenerateK,
    DomainError,
    EmptyMargins,
    GammaPole,
    Infeasible,
    InvalidCell,
    MarginsError,
    NoConvergence,
    SingularQ,
    SumMismatch,
    TableCountError,
    TooLarge,
)
from .exact import count_exact, count_exact_01, gale_ryser_feasible
from .linear import (
    alpha_c,
    alpha_c0,
    bbk0_estimate,
    bbk_estimate,
    cgm0_estimate,
    de_estimate,
    ec0_estimate,
    ec_estimate,
    ec_symmetrized,
    gc0_estimate,
    gc_estimate,
    gm_estimate,
    gmk_estimate,
    gmw0_estimate,
    orient,
)
from .margins import FallingFactorialSums, LogCount, Margins, Method, parse_margins, validate_margins
from .maxent import (
    EdgeworthTerms,
    MaxEntSolution,
    edgeworth_estimate,
    edgeworth_terms,
    gaussian_estimate,
    q_matrix,
    solve_maxent,
)
from .methods import ALL_METHODS, evaluate
from .sis import (
    SampledTable,
    SisRun,
    TrialDistribution,
    estimate_count,
    greedy_column_entry,
    run_sis,
    sample_column,
    sample_tables,
)
from .special import ln_gamma, ln_gbinom

__version__ = "0.1.0"
