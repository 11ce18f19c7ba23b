import numpy as np
import pytest

from plrank import Dataset, center, sample_rankings


def random_design(rng, n, n_edges, sizes=(2, 3, 4, 5)):
    """Connected-ish random edge list covering all n items."""
    edges = [tuple(sorted(((k, (k + 1) % n)))) for k in range(n)]  # covering cycle
    for _ in range(n_edges):
        m = int(rng.choice(sizes))
        edges.append(tuple(sorted(rng.choice(n, size=m, replace=False).tolist())))
    return edges


@pytest.fixture
def small_dataset():
    rng = np.random.default_rng(1234)
    n = 8
    u_star = center(rng.uniform(-0.5, 0.5, n))
    edges = random_design(rng, n, 30)
    return u_star, sample_rankings(u_star, edges, rng)


@pytest.fixture
def mixed_cutoff_dataset():
    rng = np.random.default_rng(99)
    n = 7
    u_star = center(rng.uniform(-1.0, 1.0, n))
    edges = random_design(rng, n, 25, sizes=(2, 3, 4, 5))
    full = sample_rankings(u_star, edges, rng)
    obs = [
        o.with_cutoff(int(rng.integers(1, o.m + 1)))
        for o in full.observations
    ]
    return u_star, Dataset(n, obs)
