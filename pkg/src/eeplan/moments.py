"""Closed-form interference moments and mean uplink transmit power.

The typical UE sits at distance ``d`` from its serving BS, which is Rayleigh
distributed with density ``2 pi lam d exp(-pi lam d^2)``. Interfering BSs
form a PPP outside the disc of radius ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import exp1

from .pathloss import PathLossModel
from .power import SystemConfig
from .special import gamma_difference

# kappa * alpha within this distance of 2 is treated as the logarithmic limit
_SINGULAR_TOL = 1e-12


def _is_singular(ka: float) -> bool:
    return abs(ka - 2.0) < _SINGULAR_TOL


def _ring_integral(ka: float, a: float, b: float) -> float:
    """int_a^b 2 x^(1 - ka) dx / 2, i.e. int_a^b x^(1-ka) dx."""
    if _is_singular(ka):
        return math.log(b / a)
    upper = 0.0 if math.isinf(b) else b ** (2.0 - ka)
    return (a ** (2.0 - ka) - upper) / (ka - 2.0)


def _tail_coefficient(model: PathLossModel, n: int, kappa: int) -> float:
    """Contribution of rings beyond ``n``, scaled to ring ``n``'s intercept."""
    edges = model.edges
    total = 0.0
    for i in range(n + 1, model.slope_count):
        ratio = (model.intercepts[i] / model.intercepts[n]) ** kappa
        total += ratio * _ring_integral(kappa * model.exponents[i], edges[i], edges[i + 1])
    return total


def _singular_ring_term(lo: float, hi: float) -> float:
    # kappa*alpha -> 2 limit of the generic ring term (own-ring part only)
    if math.isinf(hi):
        raise ValueError("outermost slope cannot be singular")
    tail_lo = float(exp1(lo)) if lo > 0 else math.inf
    if math.isinf(tail_lo):
        raise ValueError("singular innermost slope diverges")
    log_part = math.log(hi / lo) * (lo + 1.0) * math.exp(-lo)
    return 0.5 * (log_part - (math.exp(-lo) - math.exp(-hi)) - (tail_lo - float(exp1(hi))))


def interference_moment(model: PathLossModel, lambda_: float, kappa: int) -> float:
    """Mean of ``sum_{l != j} (beta_l / beta_j)^kappa`` seen by the typical UE.

    A ring whose ``kappa * alpha_n`` equals 2 is handled through the
    logarithmic limit of the generic expression.
    """
    if kappa not in (1, 2):
        raise ValueError("kappa must be 1 or 2")
    if not lambda_ > 0:
        raise ValueError("density must be positive")
    if kappa * model.exponents[-1] <= 2:
        raise ValueError("kappa * alpha_N must exceed 2")
    pl = math.pi * lambda_
    edges = model.edges
    total = 0.0
    for n in range(model.slope_count):
        ka = kappa * model.exponents[n]
        lo = pl * edges[n] ** 2
        hi = math.inf if math.isinf(edges[n + 1]) else pl * edges[n + 1] ** 2
        tail = _tail_coefficient(model, n, kappa)
        mass = gamma_difference(2.0, lo, hi)
        if _is_singular(ka):
            total += _singular_ring_term(lo, hi) + tail * mass
            continue
        own = 0.0 if math.isinf(edges[n + 1]) else edges[n + 1] ** (2.0 - ka) / (ka - 2.0)
        c_n = tail - own
        s = 1.0 + ka / 2.0
        total += mass / (ka - 2.0) + c_n * gamma_difference(s, lo, hi) / pl ** (ka / 2.0 - 1.0)
    return 2.0 * total


def mean_inverse_gain(model: PathLossModel, lambda_: float) -> float:
    """``E{1 / beta(d)}`` for a Rayleigh-distributed serving distance."""
    if not lambda_ > 0:
        raise ValueError("density must be positive")
    pl = math.pi * lambda_
    edges = model.edges
    total = 0.0
    for n, (alpha, ups) in enumerate(zip(model.exponents, model.intercepts)):
        lo = pl * edges[n] ** 2
        hi = math.inf if math.isinf(edges[n + 1]) else pl * edges[n + 1] ** 2
        total += gamma_difference((2.0 + alpha) / 2.0, lo, hi) / (ups * pl ** (alpha / 2.0))
    return total


def mean_uplink_power(model: PathLossModel, lambda_: float, config: SystemConfig) -> tuple[float, float]:
    """Return ``(E{1/beta}, U)`` where ``U = P0 * E{1/beta}`` in watts."""
    inv = mean_inverse_gain(model, lambda_)
    return inv, config.P0 * inv


@dataclass(frozen=True)
class MomentSet:
    mu1: float
    mu2: float
    mean_inv_beta: float
    avg_tx_power_U: float
    lambda_: float
    model_fingerprint: str

    @classmethod
    def compute(cls, model: PathLossModel, lambda_: float, config: SystemConfig) -> "MomentSet":
        inv, U = mean_uplink_power(model, lambda_, config)
        return cls(
            mu1=interference_moment(model, lambda_, 1),
            mu2=interference_moment(model, lambda_, 2),
            mean_inv_beta=inv,
            avg_tx_power_U=U,
            lambda_=lambda_,
            model_fingerprint=model.fingerprint,
        )
