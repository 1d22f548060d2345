"""Log-space special functions.

Everything here works on scalars or numpy arrays. Large arguments go through
the Stirling series, small ones are shifted up with the recurrence
Γ(x+1) = xΓ(x) first, which keeps absolute error near machine precision on
the whole positive axis.
"""

import math

import numpy as np

from .errors import DomainError, GammaPole

_HALF_LN_2PI = 0.5 * math.log(2.0 * math.pi)
_STIRLING_MIN = 10.0

# B_2k / (2k (2k-1)) for k = 1..7
_STIRLING_COEFFS = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)


def _as_float_array(x):
    arr = np.asarray(x, dtype=np.float64)
    return arr, arr.ndim == 0


def _unwrap(arr, scalar):
    return float(arr) if scalar else arr


def _stirling_tail(x):
    """Σ B_2k / (2k(2k-1) x^(2k-1)), the asymptotic remainder of ln Γ."""
    inv = 1.0 / x
    inv2 = inv * inv
    acc = np.zeros_like(x)
    for coeff in reversed(_STIRLING_COEFFS):
        acc = acc * inv2 + coeff
    return acc * inv


def _shift_count(x):
    return np.where(x < _STIRLING_MIN, np.ceil(_STIRLING_MIN - x), 0.0)


def _ln_gamma_pos(x):
    k = _shift_count(x)
    y = x + k
    out = (y - 0.5) * np.log(y) - y + _HALF_LN_2PI + _stirling_tail(y)
    if np.any(k > 0):
        prod = np.ones_like(x)
        for i in range(int(k.max())):
            prod = prod * np.where(i < k, x + i, 1.0)
        out = out - np.log(prod)
    return out


def ln_gamma(x):
    """Natural log of Γ(x) for x > 0."""
    arr, scalar = _as_float_array(x)
    if np.any(~(arr > 0)):
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return _unwrap(_ln_gamma_pos(arr), scalar)


def ln_abs_gamma(x):
    """ln |Γ(x)| on the whole real line minus the poles at 0, -1, -2, ...

    Negative arguments use the reflection formula.
    """
    arr, scalar = _as_float_array(x)
    if np.any(~np.isfinite(arr)):
        raise DomainError(f"ln_abs_gamma requires a finite argument, got {x!r}")
    pole = (arr <= 0) & (arr == np.round(arr))
    if np.any(pole):
        raise GammaPole(f"Γ has a pole at {arr[pole].ravel()[0]:g}")
    pos = arr > 0
    out = np.empty_like(arr)
    out[pos] = _ln_gamma_pos(arr[pos])
    neg = ~pos
    if np.any(neg):
        xn = arr[neg]
        frac = xn - np.round(xn)
        out[neg] = (
            math.log(math.pi)
            - np.log(np.abs(np.sin(math.pi * frac)))
            - _ln_gamma_pos(1.0 - xn)
        )
    return _unwrap(out, scalar)


def gamma_sign(x):
    """Sign of Γ(x) away from the poles."""
    arr, scalar = _as_float_array(x)
    sign = np.where(arr > 0, 1.0, np.where(np.floor(arr) % 2 == 0, 1.0, -1.0))
    return _unwrap(sign, scalar)


def ln_poch(x, k):
    """ln Γ(x+k) - ln Γ(x), i.e. the log rising factorial, for x > 0, x+k > 0.

    When both arguments are large the difference is formed analytically,
    avoiding the cancellation of two huge ln Γ values.
    """
    xa, sx = _as_float_array(x)
    ka, sk = _as_float_array(k)
    xa, ka = np.broadcast_arrays(xa, ka)
    y = xa + ka
    if np.any(~(xa > 0)) or np.any(~(y > 0)):
        raise DomainError("ln_poch requires x > 0 and x + k > 0")
    big = (xa >= _STIRLING_MIN) & (y >= _STIRLING_MIN)
    out = np.empty(xa.shape)
    if np.any(big):
        xb, kb, yb = xa[big], ka[big], y[big]
        out[big] = (
            (xb - 0.5) * np.log1p(kb / xb)
            + kb * np.log(yb)
            - kb
            + _stirling_tail(yb)
            - _stirling_tail(xb)
        )
    small = ~big
    if np.any(small):
        out[small] = _ln_gamma_pos(y[small]) - _ln_gamma_pos(xa[small])
    return _unwrap(out, sx and sk)


def ln_gbinom(a, b):
    """ln of the generalized binomial coefficient Γ(a+1) / (Γ(b+1) Γ(a-b+1)).

    Requires a+1 > 0, b+1 > 0 and a-b+1 > 0, where the coefficient is
    positive. The smaller of b and a-b is used as the rising-factorial
    length so huge first arguments stay accurate.
    """
    aa, sa = _as_float_array(a)
    ba, sb = _as_float_array(b)
    aa, ba = np.broadcast_arrays(aa, ba)
    rest = aa - ba
    if np.any(~(aa + 1 > 0)) or np.any(~(ba + 1 > 0)) or np.any(~(rest + 1 > 0)):
        raise DomainError(f"ln_gbinom outside domain: a={a!r}, b={b!r}")
    k = np.minimum(ba, rest)
    out = ln_poch(aa - k + 1.0, k) - _ln_gamma_pos(k + 1.0)
    return _unwrap(np.asarray(out), sa and sb)


def ln_abs_gbinom(a, b):
    """ln |C(a, b)| for arbitrary real a, b, plus the sign of the coefficient.

    Returns ``(-inf, 0.0)`` where a denominator pole makes the coefficient
    vanish. Raises GammaPole where the numerator Γ(a+1) is infinite.
    Scalar only.
    """
    a = float(a)
    b = float(b)
    num = a + 1.0
    if num <= 0 and num == round(num):
        raise GammaPole(f"C({a:g}, {b:g}) has a numerator pole")
    den1 = b + 1.0
    den2 = a - b + 1.0
    for d in (den1, den2):
        if d <= 0 and d == round(d):
            return -math.inf, 0.0
    value = ln_abs_gamma(num) - ln_abs_gamma(den1) - ln_abs_gamma(den2)
    sign = gamma_sign(num) * gamma_sign(den1) * gamma_sign(den2)
    return value, sign


def ln_factorial(n):
    arr, scalar = _as_float_array(n)
    return _unwrap(_ln_gamma_pos(arr + 1.0), scalar)


def logsumexp(values):
    """Stable ln Σ exp(values); -inf for an empty or all -inf input."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        return -math.inf
    top = arr.max()
    if not np.isfinite(top):
        return float(top)
    return float(top + np.log(np.sum(np.exp(arr - top))))
