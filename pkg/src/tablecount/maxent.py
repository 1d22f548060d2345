"""Maximum-entropy (Barvinok-Hartigan) estimates of ln Ω.

The typical table Z maximizes g(Z) = Σ (z+1) ln(z+1) - z ln z over the real
transportation polytope. Its stationarity condition makes ln(1 + 1/z_ij)
additively separable, so Z is parametrized by row and column duals,

    z_ij = 1 / (exp(a_i + b_j) - 1),   a_i + b_j > 0,

and the duals minimize the convex function

    φ(a, b) = Σ r_i a_i + Σ c_j b_j - Σ ln(1 - exp(-(a_i + b_j)))

whose Hessian, with the last column dual pinned, is exactly the Q matrix of
the Gaussian estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, SingularQ
from .margins import LogCount, Margins, Method

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000
STALL_WINDOW = 100


@dataclass(frozen=True)
class MaxEntSolution:
    Z: np.ndarray
    g_value: float
    row_residual: float
    col_residual: float
    dual_row: np.ndarray
    dual_col: np.ndarray
    iterations: int


@dataclass(frozen=True)
class EdgeworthTerms:
    mu: float
    nu: float


def g_of(Z) -> float:
    """Entropy g(Z) of independent geometric entries with means Z."""
    Z = np.asarray(Z, dtype=np.float64)
    return float(np.sum((Z + 1.0) * np.log1p(Z) - Z * np.log(Z)))


def _z_from_duals(a, b):
    return 1.0 / np.expm1(a[:, None] + b[None, :])


def _solve_rows(b, target, a0=None):
    """For each row i, solve Σ_j 1/expm1(a_i + b_j) = target_i for a_i.

    Safeguarded Newton on ln Σ_j z_ij, which is decreasing in a_i; the root is
    bracketed between the pole at -min(b) and a point where the sum is small.
    """
    lo = np.full(target.shape, -b.min())
    hi = lo + 1.0
    while True:
        s = np.sum(1.0 / np.expm1(hi[:, None] + b[None, :]), axis=1)
        low_enough = s <= target
        if low_enough.all():
            break
        hi = np.where(low_enough, hi, lo + 2.0 * (hi - lo))
    if a0 is None:
        a = 0.5 * (lo + hi)
    else:
        a = np.clip(a0, lo, hi)
        a = np.where((a <= lo) | (a >= hi), 0.5 * (lo + hi), a)
    ln_target = np.log(target)
    for _ in range(200):
        z = 1.0 / np.expm1(a[:, None] + b[None, :])
        s = z.sum(axis=1)
        h = np.log(s) - ln_target
        lo = np.where(h > 0, a, lo)
        hi = np.where(h < 0, a, hi)
        dh = -np.sum(z * z + z, axis=1) / s
        step = a - h / dh
        bad = ~((step > lo) & (step < hi))
        new = np.where(bad, 0.5 * (lo + hi), step)
        if np.all(np.abs(new - a) <= 1e-15 * np.maximum(1.0, np.abs(a))):
            a = new
            break
        a = new
    return a


def _residuals(Z, r, c):
    row = np.max(np.abs(Z.sum(axis=1) - r) / r)
    col = np.max(np.abs(Z.sum(axis=0) - c) / c)
    return float(row), float(col)


def _dual_objective(a, b, r, c):
    s = a[:, None] + b[None, :]
    if np.any(s <= 0):
        return math.inf
    return float(r @ a + c @ b - np.sum(np.log(-np.expm1(-s))))


def _newton_step(a, b, r, c):
    """One damped Newton step on φ with b_n pinned. Returns new (a, b)."""
    m, n = a.size, b.size
    Z = _z_from_duals(a, b)
    W = Z * Z + Z
    grad = np.concatenate([r - Z.sum(axis=1), (c - Z.sum(axis=0))[: n - 1]])
    H = np.zeros((m + n - 1, m + n - 1))
    H[np.arange(m), np.arange(m)] = W.sum(axis=1)
    if n > 1:
        H[m + np.arange(n - 1), m + np.arange(n - 1)] = W.sum(axis=0)[: n - 1]
        H[:m, m:] = W[:, : n - 1]
        H[m:, :m] = W[:, : n - 1].T
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise SingularQ("dual Hessian is not positive definite") from exc
    delta = -np.linalg.solve(L.T, np.linalg.solve(L, grad))
    da = delta[:m]
    db = np.concatenate([delta[m:], [0.0]])
    f0 = _dual_objective(a, b, r, c)
    slope = float(grad @ delta)
    t = 1.0
    for _ in range(60):
        a1, b1 = a + t * da, b + t * db
        f1 = _dual_objective(a1, b1, r, c)
        if f1 <= f0 + 1e-4 * t * slope or (np.isfinite(f1) and abs(f1 - f0) <= 1e-15 * abs(f0)):
            return a1, b1
        t *= 0.5
    return a + t * da, b + t * db


def solve_maxent(
    margins: Margins, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> MaxEntSolution:
    """Find the entropy-maximizing real table with the given margins.

    Alternating exact row/column dual updates (a Sinkhorn-style sweep) run
    until the residual either meets ``tol`` or stops improving by at least a
    factor of ten per window of sweeps; damped Newton then finishes.
    """
    r = margins.r.astype(np.float64)
    c = margins.c.astype(np.float64)
    b = np.zeros(margins.n)
    a = _solve_rows(b, r)
    best_window = math.inf
    window_start = math.inf
    iters = 0
    newton = False
    while True:
        Z = _z_from_duals(a, b)
        row_res, col_res = _residuals(Z, r, c)
        res = max(row_res, col_res)
        if res <= tol:
            break
        if iters >= max_iter:
            raise NoConvergence(max_iter, row_res, col_res)
        iters += 1
        if newton:
            a, b = _newton_step(a, b, r, c)
            continue
        b = _solve_rows(a, c, b)
        a = _solve_rows(b, r, a)
        best_window = min(best_window, res)
        if iters % STALL_WINDOW == 0:
            if not best_window < 0.1 * window_start:
                newton = True
            window_start = best_window
        elif iters == 1:
            window_start = res
        if res < 1e-3:
            newton = True
    # pin the last column dual at zero; the gauge (a+s, b-s) leaves Z unchanged
    shift = b[-1]
    a, b = a + shift, b - shift
    Z = _z_from_duals(a, b)
    row_res, col_res = _residuals(Z, r, c)
    return MaxEntSolution(
        Z=Z,
        g_value=g_of(Z),
        row_residual=row_res,
        col_residual=col_res,
        dual_row=a,
        dual_col=b,
        iterations=iters,
    )


def q_matrix(solution: MaxEntSolution, margins: Margins) -> np.ndarray:
    """The (m+n-1)-square covariance matrix Q, dropping the last column."""
    Z = solution.Z
    m, n = Z.shape
    Z2 = Z * Z
    Q = np.zeros((m + n - 1, m + n - 1))
    Q[np.arange(m), np.arange(m)] = margins.r + Z2.sum(axis=1)
    if n > 1:
        k = m + np.arange(n - 1)
        Q[k, k] = margins.c[: n - 1] + Z2.sum(axis=0)[: n - 1]
        off = (Z2 + Z)[:, : n - 1]
        Q[:m, m:] = off
        Q[m:, :m] = off.T
    return Q


def ln_det_spd(Q) -> float:
    """ln det of a symmetric positive definite matrix from Cholesky pivots."""
    try:
        L = np.linalg.cholesky(Q)
    except np.linalg.LinAlgError as exc:
        raise SingularQ("Q is not positive definite") from exc
    d = np.diag(L)
    if np.any(d <= 0):
        raise SingularQ("non-positive pivot in Q")
    return 2.0 * float(np.sum(np.log(d)))


def _gaussian_from(solution, Q):
    k = Q.shape[0]
    return solution.g_value - 0.5 * k * math.log(2.0 * math.pi) - 0.5 * ln_det_spd(Q)


def gaussian_estimate(margins: Margins, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> LogCount:
    solution = solve_maxent(margins, tol, max_iter)
    return LogCount(_gaussian_from(solution, q_matrix(solution, margins)), Method.MAXENT_G)


def _cell_moments(solution: MaxEntSolution, Q):
    """Covariances of the forms u_i + t_j over all m*n cells.

    The last column dual is pinned, t_n = 0, so cells in column n contribute
    u_i alone. Keeping them makes μ and ν independent of which column is
    pinned.
    """
    Z = solution.Z
    m, n = Z.shape
    cov = np.linalg.inv(Q)
    full = np.zeros((m + n, m + n))
    full[: m + n - 1, : m + n - 1] = 0.5 * (cov + cov.T)
    ii, jj = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    A = np.zeros((ii.size, m + n))
    A[np.arange(ii.size), ii] = 1.0
    A[np.arange(ii.size), m + jj] = 1.0
    K = A @ full @ A.T
    return K, Z[ii, jj]


def edgeworth_terms(solution: MaxEntSolution, Q) -> EdgeworthTerms:
    """μ = E[f²] and ν = E[h] under the Gaussian with covariance Q⁻¹.

    With ℓ = u_i + t_j, E[ℓ⁴] = 3 var(ℓ)², and for two such forms X, Y with
    variances s_X, s_Y and covariance k, E[X³Y³] = 9 s_X s_Y k + 6 k³.
    """
    try:
        K, z = _cell_moments(solution, Q)
    except np.linalg.LinAlgError as exc:
        raise SingularQ("Q is singular") from exc
    s = np.diag(K)
    cubic = z * (z + 1.0) * (2.0 * z + 1.0)
    quartic = z * (z + 1.0) * (6.0 * z * z + 6.0 * z + 1.0)
    nu = float(np.sum(quartic * 3.0 * s * s)) / 24.0
    bs = cubic * s
    mu = (9.0 * float(bs @ K @ bs) + 6.0 * float(cubic @ (K**3) @ cubic)) / 36.0
    return EdgeworthTerms(mu=mu, nu=nu)


def edgeworth_estimate(margins: Margins, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> LogCount:
    solution = solve_maxent(margins, tol, max_iter)
    Q = q_matrix(solution, margins)
    terms = edgeworth_terms(solution, Q)
    value = _gaussian_from(solution, Q) - 0.5 * terms.mu + terms.nu
    return LogCount(value, Method.MAXENT_E)
