"""Benchmark grids: margin generation, ground truth, fractional errors.

A grid is a lattice of (m, n, N) cells with several random margin sets per
cell. Each margin set gets a ground-truth ln Ω (exact when the DP is cheap
enough, EC-trial SIS otherwise) and every requested estimator is scored by
its fractional error |ln Ω̂ - ln Ω| / ln Ω.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import InvalidCell, TableCountError, TooLarge
from .exact import count_exact, count_exact_01, gale_ryser_feasible, ln_count
from .margins import LogCount, Margins, Method, validate_margins
from .methods import evaluate
from .sis import TrialDistribution, run_sis

TRUTH_LIMIT_FACTOR = 5.0


class Scheme(str, enum.Enum):
    UNIFORM_MARGINS = "uniform"
    MATRIX_DERIVED = "matrix"


@dataclass(frozen=True)
class MarginGenerator:
    scheme: Scheme
    m: int
    n: int
    N: int
    seed: int
    zero_one: bool = False


def uniform_composition(rng: np.random.Generator, total: int, parts: int) -> np.ndarray:
    """A uniformly random vector of ``parts`` positive integers summing to ``total``."""
    if parts == 1:
        return np.array([total], dtype=np.int64)
    cuts = np.sort(rng.choice(total - 1, size=parts - 1, replace=False)) + 1
    return np.diff(np.concatenate([[0], cuts, [total]])).astype(np.int64)


def uniform_table(rng: np.random.Generator, m: int, n: int, total: int) -> np.ndarray:
    """A uniformly random non-negative integer m×n table summing to ``total``."""
    cells = m * n
    bars = np.sort(rng.choice(total + cells - 1, size=cells - 1, replace=False))
    edges = np.concatenate([[-1], bars, [total + cells - 1]])
    return (np.diff(edges) - 1).reshape(m, n)


def uniform_01_table(rng: np.random.Generator, m: int, n: int, total: int) -> np.ndarray:
    flat = np.zeros(m * n, dtype=np.int64)
    flat[rng.choice(m * n, size=total, replace=False)] = 1
    return flat.reshape(m, n)


MAX_REJECTIONS = 100_000


def generate_margins(gen: MarginGenerator) -> Margins:
    """Draw one margin pair; deterministic in ``gen.seed``."""
    scheme = Scheme(gen.scheme)
    m, n, N = gen.m, gen.n, gen.N
    if min(m, n, N) < 1:
        raise InvalidCell(f"need m, n, N >= 1, got {m}, {n}, {N}")
    if gen.zero_one and N > m * n:
        raise InvalidCell(f"no 0-1 {m}x{n} table sums to {N}")
    rng = np.random.default_rng(gen.seed)
    if scheme is Scheme.UNIFORM_MARGINS:
        if N < m or N < n:
            raise InvalidCell(f"positive margins need N >= max(m, n), got N={N}, m={m}, n={n}")
        for _ in range(MAX_REJECTIONS):
            margins = validate_margins(
                uniform_composition(rng, N, m), uniform_composition(rng, N, n)
            )
            if not gen.zero_one or gale_ryser_feasible(margins):
                return margins
        raise InvalidCell("no Gale-Ryser feasible margins found by rejection")
    if gen.zero_one:
        table = uniform_01_table(rng, m, n, N)
    else:
        table = uniform_table(rng, m, n, N)
    return validate_margins(table.sum(axis=1), table.sum(axis=0))


def cell_seed(master: int, m: int, n: int, N: int, replicate: int) -> int:
    ss = np.random.SeedSequence([int(master), m, n, N, replicate])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class TruthPolicy:
    """How ground truth is obtained for a margin pair."""

    exact_guard: int = 200_000
    sis_trial: str = "ec"
    sis_iters: int = 100_000
    sis_target_std_err: float = 1e-3


@dataclass
class GridSpec:
    Ns: list
    ms: list
    ns: Optional[list] = None
    replicates: int = 10
    methods: list = field(default_factory=lambda: ["ec", "gc", "gm", "de", "bbk", "gmk"])
    scheme: str = "uniform"
    zero_one: bool = False
    truth: TruthPolicy = field(default_factory=TruthPolicy)
    budget_seconds: float = 3600.0
    seed: int = 0
    workers: Optional[int] = None

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        data = dict(data)
        truth = TruthPolicy(**data.pop("truth", {}))
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown grid config keys: {sorted(unknown)}")
        return cls(truth=truth, **data)

    @classmethod
    def from_json(cls, path) -> "GridSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def cells(self) -> list:
        out = []
        for N in self.Ns:
            for m in self.ms:
                for n in self.ns if self.ns is not None else [m]:
                    out.append((int(m), int(n), int(N)))
        return out

    def cell_valid(self, m: int, n: int, N: int) -> bool:
        if self.zero_one and N > m * n:
            return False
        if Scheme(self.scheme) is Scheme.UNIFORM_MARGINS:
            return m <= N and n <= N
        return True


@dataclass
class ErrorRecord:
    m: int
    n: int
    N: int
    replicate: int
    seed: int
    status: str = "ok"
    rows: str = ""
    cols: str = ""
    truth_method: str = ""
    ln_truth: float = math.nan
    truth_std_err: float = math.nan
    estimates: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    truth_limited: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def comparable(self):
        """Everything except wall-clock timings."""
        d = asdict(self)
        d.pop("seconds")
        return d


def fractional_error(ln_est: float, ln_truth: float) -> float:
    """|ln Ω̂ - ln Ω| / ln Ω; NaN where ln Ω = 0 makes the ratio undefined."""
    if ln_truth == 0.0 or not math.isfinite(ln_truth):
        return math.nan
    if not math.isfinite(ln_est):
        return math.inf
    return abs(ln_est - ln_truth) / abs(ln_truth)


def truth_limited(ln_est: float, truth: LogCount) -> bool:
    se = truth.std_err or 0.0
    return abs(ln_est - truth.ln_omega) <= TRUTH_LIMIT_FACTOR * se


def ground_truth(
    margins: Margins, policy: TruthPolicy, zero_one: bool, seed: int, budget: Optional[float] = None
) -> Optional[LogCount]:
    """Exact count when the DP guard admits it, EC-trial SIS otherwise.

    There is no 0-1 sampler, so 0-1 cells beyond the guard get ``None``.
    """
    try:
        if zero_one:
            return LogCount(ln_count(count_exact_01(margins, policy.exact_guard)), Method.EXACT01)
        return LogCount(ln_count(count_exact(margins, policy.exact_guard)), Method.EXACT)
    except TooLarge:
        if zero_one:
            return None
    run = run_sis(
        margins,
        TrialDistribution(policy.sis_trial),
        policy.sis_iters,
        seed,
        time_budget=budget,
        target_std_err=policy.sis_target_std_err,
    )
    return run.to_log_count()


def _score(record: ErrorRecord, margins: Margins, truth: Optional[LogCount], methods, seed):
    for method in methods:
        t0 = time.perf_counter()
        try:
            est = evaluate(method, margins, seed=seed).ln_omega
        except TableCountError as exc:
            record.failures[method] = f"{type(exc).__name__}: {exc}"
            est = math.nan
        record.seconds[method] = time.perf_counter() - t0
        record.estimates[method] = est
        if truth is None or math.isnan(est):
            continue
        record.errors[method] = fractional_error(est, truth.ln_omega)
        record.truth_limited[method] = truth_limited(est, truth)


def run_cell(spec: GridSpec, m: int, n: int, N: int) -> list:
    """All replicate records of one grid cell."""
    records = []
    if not spec.cell_valid(m, n, N):
        return [ErrorRecord(m, n, N, -1, 0, status="invalid")]
    started = time.perf_counter()
    for rep in range(spec.replicates):
        seed = cell_seed(spec.seed, m, n, N, rep)
        record = ErrorRecord(m, n, N, rep, seed)
        records.append(record)
        left = spec.budget_seconds - (time.perf_counter() - started)
        if left <= 0:
            record.status = "timeout"
            continue
        try:
            margins = generate_margins(
                MarginGenerator(Scheme(spec.scheme), m, n, N, seed, spec.zero_one)
            )
            record.rows = " ".join(map(str, margins.rows))
            record.cols = " ".join(map(str, margins.cols))
            truth = ground_truth(margins, spec.truth, spec.zero_one, seed, left)
        except TableCountError as exc:
            record.status = "error"
            record.failures["truth"] = f"{type(exc).__name__}: {exc}"
            continue
        if truth is None:
            record.status = "no-truth"
        else:
            record.truth_method = truth.method.value
            record.ln_truth = truth.ln_omega
            record.truth_std_err = truth.std_err or 0.0
        _score(record, margins, truth, spec.methods, seed)
        if time.perf_counter() - started > spec.budget_seconds:
            record.status = "timeout"
    return records


def _worker_count(spec: GridSpec) -> int:
    if spec.workers is not None:
        return max(1, int(spec.workers))
    env = os.environ.get("TABLECOUNT_THREADS")
    return max(1, int(env)) if env else 1


def _cell_job(args):
    spec, cell = args
    return run_cell(spec, *cell)


def run_grid(spec: GridSpec) -> Iterator[ErrorRecord]:
    """Stream records cell by cell, in cell order regardless of worker count."""
    cells = spec.cells()
    workers = _worker_count(spec)
    if workers == 1:
        for cell in cells:
            yield from run_cell(spec, *cell)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for records in pool.map(_cell_job, [(spec, c) for c in cells]):
            yield from records


def summarize(records: Iterable[ErrorRecord]) -> list:
    """Per-cell, per-method mean fractional error and flag shares."""
    groups: dict = {}
    for rec in records:
        groups.setdefault((rec.m, rec.n, rec.N), []).append(rec)
    if not groups:
        raise ValueError("no records to summarize")
    out = []
    for (m, n, N), recs in groups.items():
        methods = sorted({k for r in recs for k in r.estimates})
        entry = {
            "m": m,
            "n": n,
            "N": N,
            "replicates": sum(1 for r in recs if r.replicate >= 0),
            "statuses": sorted({r.status for r in recs}),
            "methods": {},
        }
        for method in methods:
            errs = [r.errors[method] for r in recs if method in r.errors]
            finite = [e for e in errs if not math.isnan(e)]
            limited = [r.truth_limited[method] for r in recs if method in r.truth_limited]
            secs = [r.seconds[method] for r in recs if method in r.seconds]
            entry["methods"][method] = {
                "mean_error": float(np.mean(finite)) if finite else math.nan,
                "count": len(finite),
                "truth_limited_share": float(np.mean(limited)) if limited else math.nan,
                "all_truth_limited": bool(limited) and all(limited),
                "mean_seconds": float(np.mean(secs)) if secs else math.nan,
                "max_seconds": float(np.max(secs)) if secs else math.nan,
            }
        out.append(entry)
    return out


CSV_BASE = [
    "m", "n", "N", "replicate", "seed", "status", "rows", "cols",
    "truth_method", "ln_truth", "truth_std_err",
]


def write_records_csv(records, methods, path):
    cols = list(CSV_BASE)
    for method in methods:
        cols += [f"ln_{method}", f"err_{method}", f"limited_{method}", f"sec_{method}"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for r in records:
            row = [getattr(r, k) for k in CSV_BASE]
            for method in methods:
                row += [
                    r.estimates.get(method, ""),
                    r.errors.get(method, ""),
                    r.truth_limited.get(method, ""),
                    r.seconds.get(method, ""),
                ]
            writer.writerow(row)


def plot_data(summary: list, spec: GridSpec) -> dict:
    """Mean-error matrices per method, indexed [row axis][N or n axis]."""
    square = spec.ns is None
    lookup = {(e["m"], e["n"], e["N"]): e for e in summary}
    out = {"square": square, "Ns": list(spec.Ns), "ms": list(spec.ms), "ns": spec.ns, "methods": {}}
    for method in spec.methods:
        grids = []
        for N in spec.Ns:
            grid = []
            for m in spec.ms:
                row = []
                for n in [m] if square else spec.ns:
                    e = lookup.get((m, n, N))
                    stats = e["methods"].get(method) if e else None
                    row.append(None if not stats or math.isnan(stats["mean_error"]) else stats["mean_error"])
                grid.append(row)
            grids.append(grid)
        out["methods"][method] = grids
    return out


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


def run_and_write(spec: GridSpec, out_dir, emit_plot_data: bool = False, progress=None) -> list:
    """Run a grid and write records.csv, summary.json and optional plot data."""
    os.makedirs(out_dir, exist_ok=True)
    records = []
    for rec in run_grid(spec):
        records.append(rec)
        if progress is not None:
            progress(rec)
    write_records_csv(records, spec.methods, os.path.join(out_dir, "records.csv"))
    summary = summarize(records)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(_json_safe(summary), fh, indent=2)
    if emit_plot_data:
        with open(os.path.join(out_dir, "plot_data.json"), "w") as fh:
            json.dump(_json_safe(plot_data(summary, spec)), fh, indent=2)
    return records


def desk_sweep(
    m_max: int = 4,
    n_max: int = 4,
    N_max: int = 12,
    replicates: int = 2,
    seed: int = 0,
    schemes=(Scheme.UNIFORM_MARGINS, Scheme.MATRIX_DERIVED),
    zero_one: bool = False,
    N_min: int = 1,
) -> list:
    """Distinct margin pairs from small cells of both generation schemes."""
    seen = {}
    for scheme in schemes:
        for m in range(1, m_max + 1):
            for n in range(1, n_max + 1):
                for N in range(max(N_min, 1), N_max + 1):
                    for rep in range(replicates):
                        gen = MarginGenerator(
                            scheme, m, n, N, cell_seed(seed, m, n, N, rep), zero_one
                        )
                        try:
                            margins = generate_margins(gen)
                        except InvalidCell:
                            continue
                        seen.setdefault((margins.rows, margins.cols), margins)
    return list(seen.values())

