import math

import numpy as np
import pytest
from scipy.stats import kstest

from eeplan.geometry import nearest_bs, sample_deployment, torus_distance


def test_shapes_and_bounds():
    dep = sample_deployment(16, 1.0, 30, seed=3)
    assert dep.ue_positions.shape == (dep.n_bs, 30, 2)
    assert np.all((dep.bs_positions >= 0) & (dep.bs_positions < 1))
    assert np.all((dep.ue_positions >= 0) & (dep.ue_positions < 1))


def test_association_is_nearest_on_torus():
    dep = sample_deployment(12, 1.0, 5, seed=11)
    pts = dep.ue_positions.reshape(-1, 2)
    d = torus_distance(dep.bs_positions[None, :, :], pts[:, None, :], 1.0)
    assert np.array_equal(np.argmin(d, axis=1), dep.association.ravel())


def test_deterministic_given_seed():
    a = sample_deployment(10, 1.0, 4, seed=5)
    b = sample_deployment(10, 1.0, 4, seed=5)
    assert np.array_equal(a.ue_positions, b.ue_positions)


def test_mean_bs_count():
    counts = [sample_deployment(16, 1.0, 1, seed=s).n_bs for s in range(2000)]
    # redraw of empty deployments is negligible at this density
    assert np.mean(counts) == pytest.approx(16, abs=3 * math.sqrt(16 / 2000))


def test_single_bs_serves_everyone():
    dep = next(d for d in (sample_deployment(1, 1.0, 1, seed=s) for s in range(200)) if d.n_bs == 1)
    dist = torus_distance(dep.bs_positions[0], dep.ue_positions[0, 0], 1.0)
    assert dep.serving_distances()[0, 0] == pytest.approx(dist)


@pytest.mark.parametrize("lam,side,K", [(0, 1, 1), (1, 0, 1), (1, 1, 0)])
def test_domain_errors(lam, side, K):
    with pytest.raises(ValueError):
        sample_deployment(lam, side, K, seed=0)


def test_torus_metric_wraps():
    assert torus_distance([0.01, 0.5], [0.99, 0.5], 1.0) == pytest.approx(0.02)


def rayleigh_cdf(lam):
    return lambda x: 1 - np.exp(-math.pi * lam * x * x)


def test_uniform_point_distance_is_rayleigh():
    # area-weighted (typical user) view: a uniform point's nearest BS distance
    rng = np.random.default_rng(0)
    dists = []
    for s in range(20000):
        dep = sample_deployment(10, 1.0, 1, seed=s)
        pts = rng.uniform(0, 1, size=(5, 2))
        owner = nearest_bs(pts, dep.bs_positions, 1.0)
        dists.append(torus_distance(dep.bs_positions[owner], pts, 1.0))
    stat = kstest(np.concatenate(dists), rayleigh_cdf(10)).statistic
    assert stat < 0.01


def test_per_cell_serving_distance_is_cell_biased():
    # every cell gets K UEs regardless of its area, so small cells are
    # over-represented and the pooled distance is stochastically shorter
    d = np.concatenate([sample_deployment(10, 1.0, 1, seed=s).serving_distances().ravel() for s in range(5000)])
    res = kstest(d, rayleigh_cdf(10))
    assert res.statistic > 0.01
    assert np.mean(d) < 0.5 / math.sqrt(10)
