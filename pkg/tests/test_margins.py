import math

import pytest
from hypothesis import given

from tablecount.errors import EmptyMargins, MarginsError, SumMismatch
from tablecount.margins import (
    LogCount,
    Margins,
    Method,
    falling_factorial_sum,
    format_margins,
    parse_margins,
    read_margins,
    validate_margins,
)

from strategies import margins


def test_basic_aggregates():
    M = validate_margins((2, 2), (2, 2))
    assert (M.m, M.n, M.N, M.c2, M.r2) == (2, 2, 4, 8, 8)


def test_zero_stripping():
    M = validate_margins((3, 0, 1), (2, 2))
    assert M.rows == (3, 1) and M.m == 2 and M.N == 4


def test_sum_mismatch():
    with pytest.raises(SumMismatch):
        validate_margins((1, 1), (3,))


def test_empty():
    with pytest.raises(EmptyMargins):
        validate_margins((0, 0), (0,))


@pytest.mark.parametrize("rows", [(1, -1, 2), (1.5, 0.5), (True, 1)])
def test_rejects_bad_entries(rows):
    with pytest.raises(MarginsError):
        validate_margins(rows, (2,))


@given(margins())
def test_idempotent(M):
    again = validate_margins(M.rows, M.cols)
    assert again == M
    assert validate_margins(M, None) is M


@given(margins())
def test_square_sums_bound_total(M):
    assert M.c2 >= M.N and M.r2 >= M.N
    assert (M.c2 == M.N) == all(c == 1 for c in M.cols)
    assert (M.r2 == M.N) == all(r == 1 for r in M.rows)


def test_falling_factorials():
    M = validate_margins((2, 3), (5,))
    f = M.falling
    assert (f.R2, f.R3, f.C2, f.C3) == (2 + 6, 0 + 6, 20, 60)
    assert falling_factorial_sum([1, 1, 1], 2) == 0


def test_aggregates_do_not_overflow():
    M = validate_margins([10**12] * 4, [2 * 10**12] * 2)
    assert M.c2 == 8 * 10**24
    assert M.falling.R3 == 4 * 10**12 * (10**12 - 1) * (10**12 - 2)


def test_text_round_trip(tmp_path):
    M = validate_margins((3, 1, 2), (2, 2, 2))
    text = format_margins(M)
    assert text == "r: 3 1 2\nc: 2 2 2\n"
    assert parse_margins(text) == M
    path = tmp_path / "m.txt"
    path.write_text("# a comment\nr: 3 1 2\n\nc: 2 2 2  # trailing\n")
    assert read_margins(path) == M


@pytest.mark.parametrize("text", ["r: 1 2\n", "r: 1\nc: x\n", "q: 1\nc: 1\n", "r: 1\nr: 1\nc: 1\n"])
def test_parse_errors(text):
    with pytest.raises(MarginsError):
        parse_margins(text)


def test_log_count_contract():
    assert LogCount(math.log(100), Method.EC).log10_omega == pytest.approx(2.0)
    with pytest.raises(ValueError):
        LogCount(float("nan"), Method.EC)
    with pytest.raises(ValueError):
        LogCount(1.0, Method.SIS)
    with pytest.raises(ValueError):
        LogCount(1.0, Method.EC, std_err=0.1)
    assert LogCount(1.0, Method.SIS, 0.1).std_err == 0.1
    assert LogCount(-math.inf, Method.EC0).ln_omega == -math.inf


def test_transpose():
    M = validate_margins((3, 1), (1, 1, 2))
    assert M.transpose() == Margins((1, 1, 2), (3, 1))
