"""Multislope distance-dependent path loss."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

LITERAL = "literal"
CONTINUITY = "continuity"
_MODE_ALIASES = {
    "literal": LITERAL,
    "paper-literal": LITERAL,
    "continuity": CONTINUITY,
    "continuity-anchored": CONTINUITY,
}

# reference propagation loss at 1 km, in dB
DEFAULT_LOSS_DB_AT_1KM = -148.1


@dataclass(frozen=True)
class PathLossModel:
    """``beta(d) = intercepts[n] * d**(-exponents[n])`` for ``d`` in ring ``n``.

    Distances are in km. ``breakpoints`` holds the interior ring edges
    ``R_1 .. R_{N-1}``; ``R_0 = 0`` and ``R_N = inf`` are implicit.
    """

    exponents: tuple[float, ...]
    breakpoints: tuple[float, ...]
    intercepts: tuple[float, ...]
    mode: str = LITERAL

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(float(a) for a in self.exponents))
        object.__setattr__(self, "breakpoints", tuple(float(r) for r in self.breakpoints))
        object.__setattr__(self, "intercepts", tuple(float(u) for u in self.intercepts))
        n = len(self.exponents)
        if n < 1:
            raise ValueError("need at least one slope")
        if len(self.intercepts) != n or len(self.breakpoints) != n - 1:
            raise ValueError("need N exponents, N intercepts and N-1 breakpoints")
        edges = (0.0,) + self.breakpoints
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("breakpoints must be positive and strictly increasing")
        if self.exponents[0] < 0 or any(b < a for a, b in zip(self.exponents, self.exponents[1:])):
            raise ValueError("exponents must be non-negative and non-decreasing")
        if any(u <= 0 for u in self.intercepts):
            raise ValueError("intercepts must be positive")
        if self.exponents[-1] <= 2:
            raise ValueError("outermost exponent must exceed 2 for finite interference")
        if self.mode not in (LITERAL, CONTINUITY):
            raise ValueError(f"unknown intercept mode {self.mode!r}")

    @property
    def slope_count(self) -> int:
        return len(self.exponents)

    @property
    def edges(self) -> tuple[float, ...]:
        """All ring edges ``R_0 .. R_N`` including 0 and inf."""
        return (0.0,) + self.breakpoints + (math.inf,)

    @property
    def fingerprint(self) -> str:
        key = repr((self.exponents, self.breakpoints, self.intercepts, self.mode))
        return hashlib.sha256(key.encode()).hexdigest()[:16]

    @classmethod
    def single_slope(cls, exponent: float = 4.0, loss_db_at_1km: float = DEFAULT_LOSS_DB_AT_1KM):
        return cls((exponent,), (), (10 ** (loss_db_at_1km / 10),))

    @classmethod
    def from_spec(
        cls,
        exponents: Sequence[float],
        breakpoints_m: Sequence[float],
        loss_db_at_1km: float = DEFAULT_LOSS_DB_AT_1KM,
        mode: str = LITERAL,
    ) -> "PathLossModel":
        """Build a model from config-style parameters.

        ``literal``: inner slopes use unit intercept at a 1 m reference
        distance, i.e. ``beta = (d / 1 m)**(-alpha_n)``; the outer slope is
        anchored at the 1 km loss. ``continuity``: the outer slope is anchored at
        1 km and inner intercepts are chosen so beta is continuous.
        """
        mode = _MODE_ALIASES.get(mode, mode)
        alphas = [float(a) for a in exponents]
        bps = [float(r) / 1000.0 for r in breakpoints_m]
        outer = 10 ** (loss_db_at_1km / 10)
        if mode == LITERAL:
            ups = [1000.0 ** (-a) for a in alphas[:-1]] + [outer]
        elif mode == CONTINUITY:
            ups = [outer]
            for n in range(len(alphas) - 2, -1, -1):
                ups.insert(0, ups[0] * bps[n] ** (alphas[n] - alphas[n + 1]))
        else:
            raise ValueError(f"unknown intercept mode {mode!r}")
        return cls(tuple(alphas), tuple(bps), tuple(ups), mode)

    @classmethod
    def default(cls, mode: str = LITERAL) -> "PathLossModel":
        """Three-slope model: exponents (0, 2, 4), breakpoints 10 m and 446 m."""
        return cls.from_spec((0.0, 2.0, 4.0), (10.0, 446.0), DEFAULT_LOSS_DB_AT_1KM, mode)

    def ring_index(self, d):
        """Index ``n`` (0-based) of the ring containing each distance."""
        return np.searchsorted(np.asarray(self.breakpoints), d, side="right")

    def gain(self, d):
        """Vectorized path loss; accepts scalars or arrays of distances in km."""
        d = np.asarray(d, dtype=float)
        if np.any(d <= 0):
            raise ValueError("distance must be positive")
        n = self.ring_index(d)
        ups = np.asarray(self.intercepts)[n]
        alphas = np.asarray(self.exponents)[n]
        out = ups * d ** (-alphas)
        return out if out.ndim else float(out)


def pathloss(d: float, model: PathLossModel) -> float:
    """Linear large-scale gain at distance ``d`` km."""
    return model.gain(d)
