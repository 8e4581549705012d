"""Upper incomplete gamma function.

Series expansion of the lower function for ``x < s + 1`` and a modified Lentz
continued fraction for the upper function otherwise (Numerical Recipes 6.2).
"""

from __future__ import annotations

import math

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 10_000


def _lower_series(s: float, x: float) -> float:
    # gamma(s, x) = x^s e^-x sum_n x^n / (s (s+1) ... (s+n))
    term = 1.0 / s
    total = term
    a = s
    for _ in range(_MAX_ITER):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"series did not converge for s={s}, x={x}")
    return total * math.exp(-x + s * math.log(x))


def _upper_cf(s: float, x: float) -> float:
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"continued fraction did not converge for s={s}, x={x}")
    return h * math.exp(-x + s * math.log(x))


def upper_incomplete_gamma(s: float, x: float) -> float:
    """Return ``Gamma(s; x) = int_x^inf t^(s-1) e^(-t) dt`` (not regularized).

    ``x = inf`` is accepted and returns 0, which is convenient for the open
    outermost ring of a path-loss model.
    """
    if not s > 0:
        raise ValueError(f"shape must be positive, got s={s}")
    if not x >= 0:
        raise ValueError(f"argument must be non-negative, got x={x}")
    if math.isinf(x):
        return 0.0
    if x == 0.0:
        return math.gamma(s)
    if x < s + 1.0:
        return math.gamma(s) - _lower_series(s, x)
    return _upper_cf(s, x)


def gamma_difference(s: float, lo: float, hi: float) -> float:
    """``Gamma(s; lo) - Gamma(s; hi)`` for ``lo <= hi``, i.e. int_lo^hi t^(s-1) e^-t dt.

    Evaluated from whichever side avoids cancellation.
    """
    if hi < lo:
        raise ValueError("hi must not be below lo")
    if lo == hi:
        return 0.0
    if math.isinf(hi) or lo >= s + 1.0:
        return upper_incomplete_gamma(s, lo) - upper_incomplete_gamma(s, hi)
    # both ends on the series side of the split: subtract lower functions
    lower_hi = _lower_series(s, hi) if hi < s + 1.0 else math.gamma(s) - _upper_cf(s, hi)
    lower_lo = _lower_series(s, lo) if lo > 0 else 0.0
    return lower_hi - lower_lo
