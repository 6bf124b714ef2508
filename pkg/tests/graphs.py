"""Small graph builders shared by the test modules."""

import numpy as np

from graph_core import Digraph


def random_digraph(n, density, seed, weighted=True):
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, False)
    weights = rng.uniform(0.1, 1.0, (n, n)) if weighted else np.ones((n, n))
    return Digraph([f"v{i}" for i in range(n)], np.where(mask, weights, 0.0))


def two_cliques(size=6, bridge=True):
    """Two directed cliques joined by one pair of opposite edges."""
    n = 2 * size
    W = np.zeros((n, n))
    for block in (range(size), range(size, n)):
        for u in block:
            for v in block:
                if u != v:
                    W[u, v] = 1.0
    if bridge:
        W[size - 1, size] = W[size, size - 1] = 1.0
    return Digraph([f"v{i}" for i in range(n)], W)
