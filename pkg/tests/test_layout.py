import numpy as np

from communities import NsbmParams, flat_partition, infer_nsbm
from graph_core import Digraph
from layout import fr_layout, plot_graph, plot_hierarchy, plot_torus, radial_positions
from spectral import torus_embedding
from tests.graphs import two_cliques


def test_single_vertex_is_centered():
    g = Digraph(["solo"], np.zeros((1, 1)))
    np.testing.assert_array_equal(fr_layout(g), [[0.5, 0.5]])


def test_coordinates_fill_the_unit_square():
    coords = fr_layout(two_cliques(5), iterations=100, seed=1)
    assert coords.shape == (10, 2)
    assert coords.min() == 0.0
    assert coords.max() == 1.0


def test_disjoint_cliques_are_drawn_apart():
    g = two_cliques(6, bridge=False)
    coords = fr_layout(g, seed=2)
    groups = np.repeat([0, 1], 6)
    distance = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
    same = (groups[:, None] == groups[None, :]) & ~np.eye(12, dtype=bool)
    assert distance[same].mean() < distance[groups[:, None] != groups[None, :]].mean()


def test_same_seed_same_coordinates():
    g = two_cliques(4)
    np.testing.assert_array_equal(fr_layout(g, seed=9), fr_layout(g, seed=9))


def test_radial_positions_place_leaves_on_the_unit_circle():
    part = flat_partition([0, 0, 1, 1, 1])
    leaves, blocks = radial_positions(part)
    np.testing.assert_allclose(np.hypot(leaves[:, 0], leaves[:, 1]), 1.0)
    assert [b.shape for b in blocks] == [(2, 2), (1, 2)]
    np.testing.assert_allclose(blocks[-1], [[0.0, 0.0]], atol=1e-12)


def test_figures_are_written_reproducibly(tmp_path):
    g = two_cliques(4)
    groups = np.repeat([0, 1], 4)
    coords = fr_layout(g, seed=0)
    part = infer_nsbm(g, seed=0, params=NsbmParams(n_sweeps=50))
    for run in ("a", "b"):
        plot_graph(g, coords, tmp_path / f"layout_{run}.svg", groups, title="two cliques")
        plot_torus(torus_embedding(g, 0.1), tmp_path / f"torus_{run}.svg", groups)
        plot_hierarchy(part, g.names, tmp_path / f"hierarchy_{run}.svg", groups)
    for name in ("layout", "torus", "hierarchy"):
        first = (tmp_path / f"{name}_a.svg").read_bytes()
        assert first.startswith(b"<?xml")
        assert first == (tmp_path / f"{name}_b.svg").read_bytes()
