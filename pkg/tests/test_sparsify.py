import numpy as np
import pytest

from graph_core import Digraph, induced_subgraph
from sparsify import (
    SCORE_COLUMNS,
    backbone,
    disparity_integral,
    disparity_scores,
    restrict_scores,
    scores_frame,
    threshold_filter,
)
from tests.graphs import random_digraph
from utils.errors import GraphError


def uniform_star(k):
    """One source with k equal out-edges."""
    return Digraph.from_edges([f"v{i}" for i in range(k + 1)], [(0, i, 1.0) for i in range(1, k + 1)])


def test_two_out_edges():
    assert disparity_integral(0.3, 2) == pytest.approx(0.7)


def test_dominant_edge_scores_zero():
    assert disparity_integral(1.0, 4) == 0.0


def test_quadrature_agrees_with_closed_form():
    assert disparity_integral(0.5, 5, "quad") == pytest.approx(0.0625, abs=1e-12)
    for k in range(2, 51):
        for p in (0.01, 0.2, 0.5, 0.93):
            assert abs(disparity_integral(p, k, "quad") - disparity_integral(p, k)) <= 1e-10


def test_uniform_ten_star_is_removed_at_default_alpha():
    g = uniform_star(10)
    scores = disparity_scores(g)
    assert all(s.w_alpha == pytest.approx(0.9**9) for s in scores)
    assert scores[0].w_alpha == pytest.approx(0.3874, abs=1e-4)
    assert backbone(g, 0.1).n_edges == 0


def test_alpha_one_keeps_every_edge():
    g = random_digraph(15, 0.3, seed=1)
    assert backbone(g, 1.0) == g


def test_sole_out_edge_always_survives():
    g = Digraph.from_edges(["a", "b", "c"], [(0, 1, 0.2), (1, 2, 5.0), (1, 0, 5.0)])
    for alpha in (1e-9, 0.01, 0.5):
        assert backbone(g, alpha).weights[0, 1] == 0.2


def test_backbones_nest_in_alpha():
    g = random_digraph(25, 0.4, seed=2)
    scores = disparity_scores(g)
    previous = None
    for alpha in (0.01, 0.05, 0.1, 0.3, 1.0):
        kept = backbone(g, alpha, scores).weights > 0
        if previous is not None:
            assert np.all(kept[previous])
        previous = kept


def test_invalid_alpha_is_rejected(triangle):
    for alpha in (0.0, -0.5, 1.5):
        with pytest.raises(GraphError):
            backbone(triangle, alpha)


def test_threshold_filter_breaks_ties_by_position():
    g = Digraph.from_edges(["a", "b", "c"], [(0, 1, 2.0), (2, 0, 1.0), (1, 2, 1.0), (1, 0, 3.0)])
    kept = threshold_filter(g, 3)
    assert kept.edges() == [(0, 1, 2.0), (1, 0, 3.0), (1, 2, 1.0)]


def test_scores_frame_names_endpoints(triangle):
    frame = scores_frame(triangle, disparity_scores(triangle))
    assert list(frame.columns) == SCORE_COLUMNS
    assert frame["u"].tolist() == ["a", "b", "c"]
    assert frame["k_out"].tolist() == [1, 1, 1]


def test_scores_decrease_in_share_and_out_degree():
    shares = np.linspace(0.01, 0.99, 50)
    for k in range(2, 21):
        values = [disparity_integral(p, k) for p in shares]
        assert np.all(np.diff(values) < 0)
    for p in (0.05, 0.3, 0.8):
        values = [disparity_integral(p, k) for k in range(2, 21)]
        assert np.all(np.diff(values) < 0)


def test_backbone_keeps_weak_sources_a_global_threshold_drops():
    hub_targets = [(0, t, 10.0) for t in range(2, 12)]
    weak = [(1, 12, 1.0)] + [(1, t, 0.01) for t in range(13, 22)]
    g = Digraph.from_edges([f"v{i}" for i in range(22)], hub_targets + weak)
    kept = backbone(g, 0.1)
    assert kept.edges() == [(1, 12, 1.0)]
    top = threshold_filter(g, kept.n_edges)
    assert top.weights[1, 12] == 0.0
    assert top != kept


def test_restricted_scores_keep_the_parent_context():
    g = random_digraph(12, 0.5, seed=4)
    chosen = [1, 3, 4, 8, 10]
    scores = disparity_scores(g)
    restricted = restrict_scores(scores, chosen)
    sub = induced_subgraph(g, chosen)
    assert len(restricted) == sub.n_edges
    by_edge = {(s.u, s.v): s for s in scores}
    for s in restricted:
        parent = by_edge[(chosen[s.u], chosen[s.v])]
        assert (s.w, s.p, s.w_alpha, s.k_out) == (parent.w, parent.p, parent.w_alpha, parent.k_out)
    assert backbone(sub, 0.3, restricted) == induced_subgraph(backbone(g, 0.3, scores), chosen)
