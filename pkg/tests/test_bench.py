import csv
import json
import math
from collections import Counter

import pytest
from scipy.stats import chisquare

from tablecount.bench import (
    ErrorRecord,
    GridSpec,
    MarginGenerator,
    Scheme,
    cell_seed,
    desk_sweep,
    fractional_error,
    generate_margins,
    run_and_write,
    run_cell,
    run_grid,
    summarize,
    truth_limited,
)
from tablecount.errors import InvalidCell
from tablecount.exact import gale_ryser_feasible
from tablecount.margins import LogCount, Method

from brute import compositions

U, MX = Scheme.UNIFORM_MARGINS, Scheme.MATRIX_DERIVED


def draw(scheme, m, n, N, seed, zero_one=False):
    return generate_margins(MarginGenerator(scheme, m, n, N, seed, zero_one))


def test_forced_composition():
    for seed in range(20):
        assert draw(U, 2, 1, 2, seed).rows == (1, 1)


def test_two_part_frequencies():
    draws = 10_000
    hits = sum(draw(U, 2, 1, 3, seed).rows == (1, 2) for seed in range(draws))
    assert abs(hits - draws / 2) <= 3 * math.sqrt(draws / 4)


def test_uniform_compositions_chi_square():
    support = [tuple(c) for c in compositions(6, 3) if min(c) > 0]
    assert len(support) == 10
    for master in range(3):
        counts = Counter(draw(U, 3, 1, 6, cell_seed(master, 3, 1, 6, k)).rows for k in range(5000))
        assert set(counts) == set(support)
        assert chisquare([counts[s] for s in support]).pvalue > 0.001


def test_matrix_derived_weights_tables():
    draws = 20_000
    hits = sum(draw(MX, 2, 2, 2, seed) == draw(U, 2, 2, 2, 0) for seed in range(draws))
    # r=c=(1,1) comes from 2 of the 10 tables
    p = 2 / 10
    assert abs(hits - draws * p) <= 3 * math.sqrt(draws * p * (1 - p))


def test_invalid_cells():
    with pytest.raises(InvalidCell):
        draw(U, 4, 2, 3, 0)
    with pytest.raises(InvalidCell):
        draw(MX, 2, 2, 5, 0, zero_one=True)


def test_zero_one_generation_is_feasible():
    for seed in range(50):
        for scheme in (U, MX):
            g = draw(scheme, 3, 4, 6, seed, zero_one=True)
            assert gale_ryser_feasible(g)


def test_deterministic_generation():
    assert draw(MX, 4, 3, 20, 99) == draw(MX, 4, 3, 20, 99)
    assert cell_seed(0, 2, 3, 4, 5) == cell_seed(0, 2, 3, 4, 5) != cell_seed(1, 2, 3, 4, 5)


def test_fractional_error():
    assert fractional_error(math.log(110), math.log(100)) == pytest.approx(
        (math.log(110) - math.log(100)) / math.log(100)
    )
    assert fractional_error(0.9, 1.0) == pytest.approx(0.1)
    assert math.isnan(fractional_error(0.3, 0.0))
    assert fractional_error(-math.inf, 1.0) == math.inf


def test_truth_limited_rule():
    truth = LogCount(10.0, Method.SIS, 0.01)
    assert truth_limited(10.04, truth)
    assert not truth_limited(10.06, truth)
    assert not truth_limited(10.0 + 1e-9, LogCount(10.0, Method.EXACT))
    assert truth_limited(10.0, LogCount(10.0, Method.EXACT))


def small_spec(**kw):
    base = dict(Ns=[4, 8], ms=[2, 3], replicates=3, methods=["ec", "gc", "bbk"], seed=5)
    base.update(kw)
    return GridSpec.from_dict(base)


def test_exact_truth_grid():
    records = list(run_grid(small_spec()))
    assert len(records) == 2 * 2 * 3
    for r in records:
        assert r.status == "ok" and r.truth_method == "exact" and r.truth_std_err == 0.0
        assert all(e >= 0 for e in r.errors.values() if not math.isnan(e))


def test_invalid_cell_record():
    recs = run_cell(small_spec(), 5, 5, 4)
    assert [r.status for r in recs] == ["invalid"]


def test_replicate_determinism():
    spec = small_spec()
    a = [r.comparable() for r in run_cell(spec, 3, 3, 8)]
    b = [r.comparable() for r in run_cell(spec, 3, 3, 8)]
    assert a == b


def test_parallel_grid_matches_serial():
    serial = [r.comparable() for r in run_grid(small_spec(workers=1))]
    parallel = [r.comparable() for r in run_grid(small_spec(workers=2))]
    assert serial == parallel


def test_sis_truth_beyond_guard():
    spec = small_spec(Ns=[30], ms=[4], replicates=1, truth={"exact_guard": 10, "sis_iters": 20_000})
    (rec,) = run_grid(spec)
    assert rec.truth_method == "sis" and rec.truth_std_err > 0
    assert set(rec.truth_limited) == {"ec", "gc", "bbk"}


def test_timeout_flag():
    recs = run_cell(small_spec(budget_seconds=0.0), 2, 2, 4)
    assert all(r.status == "timeout" for r in recs)


def test_zero_one_grid():
    spec = small_spec(zero_one=True, methods=["ec0", "gc0", "bbk0", "gmw0", "cgm0"], Ns=[4], ms=[3])
    for r in run_grid(spec):
        assert r.truth_method == "exact01"
        assert all(math.isfinite(v) for v in r.estimates.values())


def test_summarize_single_record():
    rec = ErrorRecord(2, 2, 4, 0, 1, estimates={"ec": 1.0}, errors={"ec": 0.25}, truth_limited={"ec": False},
                      seconds={"ec": 0.5})
    (cell,) = summarize([rec])
    assert cell["methods"]["ec"]["mean_error"] == 0.25
    assert cell["methods"]["ec"]["all_truth_limited"] is False


def test_summarize_flags_all_truth_limited():
    recs = [
        ErrorRecord(2, 2, 4, k, k, estimates={"ec": 1.0}, errors={"ec": 0.1 * k}, truth_limited={"ec": True},
                    seconds={"ec": 0.1})
        for k in range(3)
    ]
    (cell,) = summarize(recs)
    stats = cell["methods"]["ec"]
    assert stats["all_truth_limited"] and stats["truth_limited_share"] == 1.0
    assert stats["mean_error"] == pytest.approx(0.1)


def test_summarize_empty():
    with pytest.raises(ValueError):
        summarize([])


def test_ec_beats_gc_on_dense_cells():
    spec = GridSpec.from_dict(dict(Ns=[12], ms=[2, 3], replicates=10, methods=["ec", "gc"]))
    for cell in summarize(run_grid(spec)):
        assert cell["methods"]["ec"]["mean_error"] <= cell["methods"]["gc"]["mean_error"]


def test_run_and_write(tmp_path):
    spec = small_spec(ns=[2, 3], scheme="matrix")
    records = run_and_write(spec, tmp_path, emit_plot_data=True)
    rows = list(csv.DictReader(open(tmp_path / "records.csv")))
    assert len(rows) == len(records) == 2 * 2 * 2 * 3
    assert rows[0]["m"] == "2" and "err_ec" in rows[0]
    summary = json.load(open(tmp_path / "summary.json"))
    assert len(summary) == 8
    plot = json.load(open(tmp_path / "plot_data.json"))
    assert plot["square"] is False
    assert len(plot["methods"]["ec"]) == 2 and len(plot["methods"]["ec"][0]) == 2
    assert len(plot["methods"]["ec"][0][0]) == 2


def test_unknown_config_key():
    with pytest.raises(ValueError):
        GridSpec.from_dict({"Ns": [4], "ms": [2], "colour": 1})


def test_desk_sweep_distinct():
    sweep = desk_sweep()
    keys = {(s.rows, s.cols) for s in sweep}
    assert len(keys) == len(sweep) > 300
    assert all(s.m <= 4 and s.n <= 4 and s.N <= 12 for s in sweep)
