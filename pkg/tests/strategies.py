"""Hypothesis strategies for margin pairs."""

import numpy as np
from hypothesis import strategies as st

from tablecount.margins import validate_margins


@st.composite
def margins(draw, max_len=6, max_entry=9):
    """Random positive margins with matching totals."""
    rows = draw(st.lists(st.integers(1, max_entry), min_size=1, max_size=max_len))
    N = sum(rows)
    n = draw(st.integers(1, min(max_len, N)))
    cuts = sorted(draw(st.sets(st.integers(1, N - 1), min_size=n - 1, max_size=n - 1))) if n > 1 else []
    cols = np.diff([0, *cuts, N]).tolist()
    return validate_margins(rows, cols)
