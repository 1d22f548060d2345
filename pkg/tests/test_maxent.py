import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings

from tablecount.errors import NoConvergence
from tablecount.margins import validate_margins
from tablecount.maxent import (
    edgeworth_estimate,
    edgeworth_terms,
    g_of,
    gaussian_estimate,
    ln_det_spd,
    q_matrix,
    solve_maxent,
)

from brute import tables_with_margins
from strategies import margins


def M(rows, cols):
    return validate_margins(rows, cols)


SQ = M((2, 2), (2, 2))


def test_uniform_margins_give_constant_table():
    sol = solve_maxent(M((6, 6, 6), (9, 9)))
    assert np.allclose(sol.Z, 3.0, rtol=1e-10)


def test_square_example():
    sol = solve_maxent(SQ)
    assert np.allclose(sol.Z, 1.0, rtol=1e-10)
    assert sol.g_value == pytest.approx(8 * math.log(2), abs=1e-10)
    Q = q_matrix(sol, SQ)
    expected = np.array([[4.0, 0.0, 2.0], [0.0, 4.0, 2.0], [2.0, 2.0, 4.0]])
    assert np.allclose(Q, expected, atol=1e-9)
    assert ln_det_spd(Q) == pytest.approx(math.log(np.linalg.det(expected)), abs=1e-8)


def test_perturbation_lowers_g():
    Mg = M((3, 5, 2), (4, 4, 2))
    Z = solve_maxent(Mg).Z
    for delta in (1e-3, -1e-3, 0.1):
        P = Z.copy()
        P[0, 0] += delta
        P[1, 1] += delta
        P[0, 1] -= delta
        P[1, 0] -= delta
        assert g_of(P) < g_of(Z)


def test_single_cell_gaussian():
    assert gaussian_estimate(M((1,), (1,))).ln_omega == pytest.approx(
        2 * math.log(2) - 0.5 * math.log(4 * math.pi), abs=1e-10
    )
    N = 7
    g = (N + 1) * math.log(N + 1) - N * math.log(N)
    expected = g - 0.5 * math.log(2 * math.pi) - 0.5 * math.log(N + N * N)
    assert gaussian_estimate(M((N,), (N,))).ln_omega == pytest.approx(expected, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(margins(max_len=5, max_entry=12))
def test_solution_invariants(Mg):
    sol = solve_maxent(Mg)
    assert np.all(sol.Z > 0)
    assert sol.row_residual <= 1e-10 and sol.col_residual <= 1e-10
    sep = np.log1p(1.0 / sol.Z) - (sol.dual_row[:, None] + sol.dual_col[None, :])
    assert np.abs(sep).max() <= 1e-8
    assert abs(sol.g_value - g_of(sol.Z)) <= 1e-12
    assert sol.dual_col[-1] == 0.0
    Q = q_matrix(sol, Mg)
    assert np.array_equal(Q, Q.T)
    terms = edgeworth_terms(sol, Q)
    assert terms.mu >= 0


def test_deterministic():
    Mg = M((7, 1, 3, 4), (2, 9, 4))
    a, b = solve_maxent(Mg), solve_maxent(Mg)
    assert np.array_equal(a.Z, b.Z) and a.iterations == b.iterations


@pytest.mark.parametrize("rows, cols", [((3, 5, 2), (4, 4, 2)), ((1, 1, 6), (2, 3, 3)), ((4, 4), (1, 2, 5))])
def test_concavity(rows, cols):
    Mg = M(rows, cols)
    indep = np.outer(Mg.r, Mg.c) / Mg.N
    tables = tables_with_margins(rows, cols)
    rng = np.random.default_rng(0)
    for _ in range(20):
        t1, t2 = (tables[i] for i in rng.integers(len(tables), size=2))
        Z1, Z2 = 0.5 * (indep + t1), 0.5 * (indep + t2)
        lam = rng.uniform(0.05, 0.95)
        assert g_of(lam * Z1 + (1 - lam) * Z2) >= lam * g_of(Z1) + (1 - lam) * g_of(Z2) - 1e-12


@pytest.mark.parametrize("rows, cols", [((3, 5, 2), (4, 4, 2)), ((1, 1, 6, 2), (2, 3, 3, 1, 1)), ((9, 2), (1, 4, 6))])
def test_rotation_invariance(rows, cols):
    base = M(rows, cols)
    g0 = gaussian_estimate(base).ln_omega
    e0 = edgeworth_estimate(base).ln_omega
    for shift in range(1, len(cols)):
        rotated = M(rows, cols[shift:] + cols[:shift])
        assert abs(gaussian_estimate(rotated).ln_omega - g0) <= 1e-8
        assert abs(edgeworth_estimate(rotated).ln_omega - e0) <= 1e-8


def test_edgeworth_composes_with_gaussian():
    for Mg in (SQ, M((3, 5, 2), (4, 4, 2)), M((4,), (4,))):
        sol = solve_maxent(Mg)
        terms = edgeworth_terms(sol, q_matrix(sol, Mg))
        expected = gaussian_estimate(Mg).ln_omega - terms.mu / 2 + terms.nu
        assert edgeworth_estimate(Mg).ln_omega == pytest.approx(expected, abs=1e-12)


def test_square_edgeworth_closer_than_gaussian():
    exact = math.log(3)
    g = gaussian_estimate(SQ).ln_omega
    e = edgeworth_estimate(SQ).ln_omega
    print(f"r=c=(2,2): gaussian {g:.6f}, edgeworth {e:.6f}, exact {exact:.6f}")
    assert abs(e - exact) < abs(g - exact)


def test_single_cell_terms():
    # every cell, including the pinned last column, contributes u_1
    N = 1
    sol = solve_maxent(M((N,), (N,)))
    Q = q_matrix(sol, M((N,), (N,)))
    s = 1.0 / Q[0, 0]
    z = sol.Z[0, 0]
    cubic = z * (z + 1) * (2 * z + 1)
    quartic = z * (z + 1) * (6 * z * z + 6 * z + 1)
    terms = edgeworth_terms(sol, Q)
    assert terms.nu == pytest.approx(quartic * 3 * s * s / 24, rel=1e-12)
    assert terms.mu == pytest.approx(15 * cubic * cubic * s**3 / 36, rel=1e-12)


def _matchings(slots):
    if not slots:
        yield []
        return
    first, rest = slots[0], slots[1:]
    for k in range(len(rest)):
        for tail in _matchings(rest[:k] + rest[k + 1 :]):
            yield [(first, rest[k])] + tail


def test_wick_pairings_2x2():
    Mg = M((3, 1), (2, 2))
    sol = solve_maxent(Mg)
    Q = q_matrix(sol, Mg)
    m, n = 2, 2
    C = np.zeros((m + n, m + n))
    C[: m + n - 1, : m + n - 1] = np.linalg.inv(Q)
    cells = list(itertools.product(range(m), range(n)))

    def cov(a, b):
        (i, j), (k, l) = a, b
        return C[i, k] + C[i, m + l] + C[m + j, k] + C[m + j, m + l]

    def moment(labels):
        return sum(math.prod(cov(labels[p], labels[q]) for p, q in match) for match in _matchings(list(range(len(labels)))))

    z = {a: sol.Z[a] for a in cells}
    cubic = {a: z[a] * (z[a] + 1) * (2 * z[a] + 1) for a in cells}
    quartic = {a: z[a] * (z[a] + 1) * (6 * z[a] ** 2 + 6 * z[a] + 1) for a in cells}
    nu = sum(quartic[a] * moment([a] * 4) for a in cells) / 24
    mu = sum(cubic[a] * cubic[b] * moment([a] * 3 + [b] * 3) for a in cells for b in cells) / 36
    terms = edgeworth_terms(sol, Q)
    assert terms.nu == pytest.approx(nu, rel=1e-10)
    assert terms.mu == pytest.approx(mu, rel=1e-10)


def test_no_convergence_reports_residuals():
    with pytest.raises(NoConvergence) as info:
        solve_maxent(M((30, 1, 1), (1, 1, 30)), tol=1e-14, max_iter=2)
    assert info.value.max_iter == 2
