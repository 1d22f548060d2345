"""Margin vectors, count results and the margins text format."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyMargins, MarginsError, SumMismatch


class Method(str, enum.Enum):
    EC = "ec"
    EC_SYM = "ec-sym"
    GC = "gc"
    GM = "gm"
    DE = "de"
    BBK = "bbk"
    GMK = "gmk"
    MAXENT_G = "maxent-g"
    MAXENT_E = "maxent-e"
    SIS = "sis"
    EXACT = "exact"
    EC0 = "ec0"
    GC0 = "gc0"
    BBK0 = "bbk0"
    GMW0 = "gmw0"
    CGM0 = "cgm0"
    EXACT01 = "exact01"

    @property
    def is_sampling(self) -> bool:
        return self is Method.SIS


@dataclass(frozen=True)
class LogCount:
    """An estimate (or exact value) of ln Ω with its provenance."""

    ln_omega: float
    method: Method
    std_err: Optional[float] = None

    def __post_init__(self):
        if math.isnan(self.ln_omega):
            raise ValueError(f"{self.method.value} produced NaN")
        if self.method.is_sampling != (self.std_err is not None):
            raise ValueError("std_err is carried by sampling methods only")

    @property
    def log10_omega(self) -> float:
        return self.ln_omega / math.log(10.0)


@dataclass(frozen=True)
class FallingFactorialSums:
    """R_k = Σ_i [r_i]_k and C_k = Σ_j [c_j]_k for k = 2, 3."""

    R2: int
    R3: int
    C2: int
    C3: int


def falling_factorial_sum(values: Sequence[int], k: int) -> int:
    total = 0
    for v in values:
        term = 1
        for i in range(k):
            term *= v - i
        total += term
    return total


def _clean(values, name) -> tuple:
    out = []
    for v in values:
        if isinstance(v, (bool, np.bool_)):
            raise MarginsError(f"{name} entries must be integers, got {v!r}")
        iv = int(v)
        if iv != v:
            raise MarginsError(f"{name} entries must be integers, got {v!r}")
        if iv < 0:
            raise MarginsError(f"{name} entries must be non-negative, got {iv}")
        if iv:
            out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class Margins:
    """Validated positive row and column sums.

    Build instances with :func:`validate_margins`; zeros are stripped there.
    Aggregates are plain Python ints so they never overflow.
    """

    rows: tuple
    cols: tuple
    N: int = field(init=False)
    r2: int = field(init=False)
    c2: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "N", sum(self.rows))
        object.__setattr__(self, "r2", sum(r * r for r in self.rows))
        object.__setattr__(self, "c2", sum(c * c for c in self.cols))

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.cols)

    @property
    def r(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=np.int64)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.cols, dtype=np.int64)

    @property
    def falling(self) -> FallingFactorialSums:
        return FallingFactorialSums(
            R2=falling_factorial_sum(self.rows, 2),
            R3=falling_factorial_sum(self.rows, 3),
            C2=falling_factorial_sum(self.cols, 2),
            C3=falling_factorial_sum(self.cols, 3),
        )

    def transpose(self) -> "Margins":
        return Margins(self.cols, self.rows)

    def __str__(self) -> str:
        return format_margins(self)


def validate_margins(rows, cols) -> Margins:
    """Check and normalize a pair of margin vectors.

    >>> validate_margins([3, 0, 1], [2, 2]).rows
    (3, 1)
    """
    if isinstance(rows, Margins):
        return rows
    r = _clean(rows, "rows")
    c = _clean(cols, "cols")
    if not r or not c:
        if sum(r) != sum(c):
            raise SumMismatch(f"row total {sum(r)} != column total {sum(c)}")
        raise EmptyMargins("margins are empty after removing zeros")
    if sum(r) != sum(c):
        raise SumMismatch(f"row total {sum(r)} != column total {sum(c)}")
    return Margins(r, c)


def parse_margins(text: str) -> Margins:
    """Parse the two-line ``r: ...`` / ``c: ...`` format."""
    found = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip().lower()
        if not sep or key not in ("r", "c"):
            raise MarginsError(f"cannot parse margins line {raw!r}")
        if key in found:
            raise MarginsError(f"duplicate {key!r} line")
        try:
            found[key] = [int(tok) for tok in rest.split()]
        except ValueError as exc:
            raise MarginsError(f"non-integer entry in {raw!r}") from exc
    if set(found) != {"r", "c"}:
        raise MarginsError("margins text needs both an 'r:' and a 'c:' line")
    return validate_margins(found["r"], found["c"])


def format_margins(margins: Margins) -> str:
    return (
        "r: " + " ".join(map(str, margins.rows)) + "\n"
        "c: " + " ".join(map(str, margins.cols)) + "\n"
    )


def read_margins(path) -> Margins:
    with open(path) as fh:
        return parse_margins(fh.read())
