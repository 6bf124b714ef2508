"""Disparity-filter backbone of a weighted digraph (out-edges only).

For a source u with k = k_out(u) positive out-edges and strength s(u), an
edge of normalized weight p = w / s(u) scores
    w_alpha = 1 - (k - 1) * integral_0^p (1 - x)^(k - 2) dx = (1 - p)^(k - 1)
and survives the filter when w_alpha <= alpha.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from scipy import integrate

from graph_core import Digraph
from utils.errors import GraphError

SCORE_COLUMNS = ["u", "v", "w", "p", "w_alpha", "k_out"]


@dataclass(frozen=True)
class DisparityScore:
    u: int
    v: int
    w: float
    p: float
    w_alpha: float
    k_out: int


def disparity_integral(p, k, method="closed"):
    """Probability under the uniform null of a normalized weight at least p."""
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"Normalized weight must lie in [0, 1], got {p}")
    if k < 1:
        raise GraphError(f"Out-degree must be positive, got {k}")
    if method == "closed":
        return float((1.0 - p) ** (k - 1))
    if method == "quad":
        if k == 1:
            return 1.0
        value, _ = integrate.quad(lambda x: (1 - x) ** (k - 2), 0, p, epsabs=1e-14, epsrel=1e-14)
        return float(1.0 - (k - 1) * value)
    raise GraphError(f"Unknown integration method: {method}")


def disparity_scores(g, method="closed"):
    """Score every positive-weight edge whose source has positive out-strength."""
    strength = g.out_strength
    k_out = g.out_degree
    scores = []
    for u, v, w in g.edges():
        if strength[u] <= 0:
            continue
        p = min(1.0, w / strength[u])
        k = int(k_out[u])
        scores.append(DisparityScore(u, v, w, p, disparity_integral(p, k, method), k))
    return scores


def restrict_scores(scores, indices):
    """Scores of the edges inside a vertex subset, re-indexed to the induced subgraph.

    Each edge keeps the p and k_out of the graph it was scored on.
    """
    position = {int(v): i for i, v in enumerate(indices)}
    return [
        DisparityScore(position[s.u], position[s.v], s.w, s.p, s.w_alpha, s.k_out)
        for s in scores
        if s.u in position and s.v in position
    ]


def _check_alpha(alpha):
    if not 0.0 < alpha <= 1.0:
        raise GraphError(f"alpha must lie in (0, 1], got {alpha}")


def backbone(g, alpha, scores=None):
    """Keep edges with w_alpha <= alpha; a sole out-edge is always kept."""
    _check_alpha(alpha)
    scores = disparity_scores(g) if scores is None else scores
    W = np.zeros_like(g.weights)
    for s in scores:
        if s.k_out == 1 or s.w_alpha <= alpha:
            W[s.u, s.v] = s.w
    filtered = Digraph(g.names, W)
    logging.info(f"Backbone at alpha={alpha} keeps {filtered.n_edges} of {g.n_edges} edges")
    return filtered


def threshold_filter(g, n_edges):
    """Keep the n_edges heaviest edges globally; ties go to the earlier (u, v)."""
    if n_edges < 0:
        raise GraphError(f"Edge count must be non-negative, got {n_edges}")
    ranked = sorted(g.edges(), key=lambda e: (-e[2], e[0], e[1]))[:n_edges]
    W = np.zeros_like(g.weights)
    for u, v, w in ranked:
        W[u, v] = w
    return Digraph(g.names, W)


def scores_frame(g, scores):
    """Scores as a table with vertex names in the u and v columns."""
    rows = [asdict(s) for s in scores]
    frame = pd.DataFrame(rows, columns=SCORE_COLUMNS)
    frame["u"] = [g.names[u] for u in frame["u"]]
    frame["v"] = [g.names[v] for v in frame["v"]]
    return frame
