"""PPP deployments on a wrap-around square with nearest-BS association."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .rng import substream

RETRY_FACTOR = 10**6


def torus_delta(a, b, side: float):
    """Minimum-image displacement ``b - a`` on a square torus."""
    diff = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    return diff - side * np.round(diff / side)


def torus_distance(a, b, side: float):
    return np.linalg.norm(torus_delta(a, b, side), axis=-1)


@dataclass(frozen=True)
class Deployment:
    """One realization. ``ue_positions[l]`` holds the K UEs served by BS ``l``."""

    side_length: float
    bs_positions: np.ndarray  # (L, 2)
    ue_positions: np.ndarray  # (L, K, 2)
    lambda_: float
    K: int

    @property
    def n_bs(self) -> int:
        return self.bs_positions.shape[0]

    @property
    def association(self) -> np.ndarray:
        """Serving BS index of every UE, shape (L, K)."""
        return np.repeat(np.arange(self.n_bs)[:, None], self.K, axis=1)

    def distances(self) -> np.ndarray:
        """``d[j, l, k]``: torus distance from BS ``j`` to UE ``k`` of cell ``l``."""
        ue = self.ue_positions[None, :, :, :]
        bs = self.bs_positions[:, None, None, :]
        return torus_distance(bs, ue, self.side_length)

    def serving_distances(self) -> np.ndarray:
        """Shape (L, K)."""
        return torus_distance(self.bs_positions[:, None, :], self.ue_positions, self.side_length)


def nearest_bs(points: np.ndarray, bs_positions: np.ndarray, side: float) -> np.ndarray:
    tree = cKDTree(bs_positions, boxsize=side)
    return tree.query(points)[1]


def sample_deployment(lambda_: float, side_length: float, K: int, seed: int, task: int = 0) -> Deployment:
    if not lambda_ > 0:
        raise ValueError("density must be positive")
    if not side_length > 0:
        raise ValueError("side length must be positive")
    if K < 1:
        raise ValueError("need at least one UE per cell")
    rng = substream(seed, task, "positions")
    mean_count = lambda_ * side_length**2
    n_bs = 0
    while n_bs == 0:
        n_bs = int(rng.poisson(mean_count))
    bs = rng.uniform(0.0, side_length, size=(n_bs, 2))

    ues = np.empty((n_bs, K, 2))
    filled = np.zeros(n_bs, dtype=int)
    budget = RETRY_FACTOR * max(mean_count, 1.0) * K
    drawn = 0
    batch = max(256, 4 * n_bs * K)
    while filled.min() < K:
        if drawn >= budget:
            raise RuntimeError(f"UE placement exceeded {budget:.0f} draws")
        pts = rng.uniform(0.0, side_length, size=(batch, 2))
        drawn += batch
        owner = nearest_bs(pts, bs, side_length)
        for p, cell in zip(pts, owner):
            if filled[cell] < K:
                ues[cell, filled[cell]] = p
                filled[cell] += 1
    return Deployment(side_length, bs, ues, lambda_, K)
