"""HITS hub and authority scores by L2-normalized power iteration."""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from utils.diagnostics import warn
from utils.errors import CentralityError


@dataclass(frozen=True, eq=False)
class HitsScores:
    names: tuple
    hub: np.ndarray
    authority: np.ndarray
    iterations: int
    converged: bool

    def to_frame(self):
        return pd.DataFrame({"vertex": list(self.names), "hub": self.hub, "authority": self.authority})


def _unit(x):
    norm = np.linalg.norm(x)
    return x / norm if norm > 0 else x


def hits(g, tol=1e-10, max_iter=1000):
    """h <- W a, a <- W^T h from a uniform start until no entry moves by tol."""
    if g.n_edges == 0:
        raise CentralityError("HITS is undefined on a graph without edges")
    W = g.weights
    authority = np.full(g.n, 1.0 / np.sqrt(g.n))
    hub = _unit(W @ authority)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_hub = _unit(W @ authority)
        new_authority = _unit(W.T @ new_hub)
        change = max(np.max(np.abs(new_hub - hub)), np.max(np.abs(new_authority - authority)))
        hub, authority = new_hub, new_authority
        if change < tol:
            converged = True
            break
    if not converged:
        warn("hits_not_converged", iterations=iterations, tol=tol)
    logging.info(f"HITS finished after {iterations} iterations (converged={converged})")
    return HitsScores(g.names, hub, authority, iterations, converged)
