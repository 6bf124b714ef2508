"""Force-directed coordinates and the static SVG figures of a run."""

import logging

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import networkx as nx
import numpy as np

from communities import project
from graph_core import decompose

matplotlib.rcParams["svg.hashsalt"] = "tabgraph"
matplotlib.rcParams["svg.fonttype"] = "none"


def _normalize(coords):
    """Per-axis min-max to [0, 1]; a degenerate axis maps to 0.5."""
    lo = coords.min(axis=0)
    span = coords.max(axis=0) - lo
    out = np.full_like(coords, 0.5)
    ok = span > 0
    out[:, ok] = (coords[:, ok] - lo[ok]) / span[ok]
    return out


def fr_layout(g, iterations=500, seed=0):
    """Fruchterman-Reingold on the symmetrized weights, normalized to the unit square."""
    if g.n == 1:
        return np.array([[0.5, 0.5]])
    W_s = decompose(g).symmetric
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    for u, v in zip(*np.nonzero(np.triu(W_s, k=1))):
        G.add_edge(int(u), int(v), weight=float(W_s[u, v]))
    pos = nx.spring_layout(G, iterations=iterations, seed=seed, weight="weight")
    return _normalize(np.array([pos[v] for v in range(g.n)], dtype=np.float64))


def _colors(groups, n):
    if groups is None:
        return ["tab:blue"] * n
    cmap = plt.get_cmap("tab10")
    return [cmap(int(k) % 10) for k in groups]


def _save_svg(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logging.info(f"Wrote {path}")


def plot_graph(g, coords, path, groups=None, title=None):
    """Edges as straight segments, width and opacity following weight."""
    fig, ax = plt.subplots(figsize=(7, 7))
    top = max((w for _, _, w in g.edges()), default=1.0)
    for u, v, w in g.edges():
        ax.annotate(
            "",
            xy=coords[v],
            xytext=coords[u],
            arrowprops={
                "arrowstyle": "->",
                "lw": 0.3 + 2.0 * w / top,
                "alpha": 0.15 + 0.6 * w / top,
                "color": "0.3",
            },
        )
    ax.scatter(coords[:, 0], coords[:, 1], c=_colors(groups, g.n), s=60, zorder=3)
    for i, name in enumerate(g.names):
        ax.text(coords[i, 0], coords[i, 1], name, fontsize=6, ha="center", va="bottom")
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, 1.05)
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    _save_svg(fig, path)


def plot_torus(embedding, path, groups=None):
    """Vertices at their two phases; marker area grows with r."""
    fig, ax = plt.subplots(figsize=(7, 7))
    ok = embedding.defined.all(axis=1)
    colors = np.array(_colors(groups, len(embedding.names)), dtype=object)
    ax.scatter(
        embedding.theta1[ok],
        embedding.theta2[ok],
        c=list(colors[ok]),
        s=20 + 60 * embedding.r[ok],
    )
    for i in np.flatnonzero(ok):
        ax.text(embedding.theta1[i], embedding.theta2[i], embedding.names[i], fontsize=6)
    ax.set_xlim(0, 2 * np.pi)
    ax.set_ylim(0, 2 * np.pi)
    ax.set_xlabel("theta1")
    ax.set_ylabel("theta2")
    ax.set_title(f"Magnetic eigenmap, q={embedding.q:g}")
    _save_svg(fig, path)


def radial_positions(part):
    """Leaf and block coordinates of the hierarchy drawn as concentric rings.

    Leaves sit on the unit circle ordered by their block path; level l blocks
    sit on radius (L - 1 - l) / L at the mean angle of their members.
    """
    L = part.n_levels
    n = len(part.levels[0])
    paths = [project(part, l) for l in range(L)]
    order = sorted(range(n), key=lambda v: tuple(p[v] for p in reversed(paths)) + (v,))
    angle = np.zeros(n)
    angle[order] = 2 * np.pi * np.arange(n) / n
    leaves = np.column_stack([np.cos(angle), np.sin(angle)])

    blocks = []
    for l in range(L):
        B = int(paths[l].max()) + 1
        radius = (L - 1 - l) / L
        mean_angle = np.array([angle[paths[l] == k].mean() for k in range(B)])
        blocks.append(radius * np.column_stack([np.cos(mean_angle), np.sin(mean_angle)]))
    return leaves, blocks


def plot_hierarchy(part, names, path, groups=None):
    leaves, blocks = radial_positions(part)
    fig, ax = plt.subplots(figsize=(7, 7))
    for v, b in enumerate(part.levels[0]):
        ax.plot(*zip(leaves[v], blocks[0][b]), color="0.6", lw=0.6)
    for l in range(1, part.n_levels):
        for child, parent in enumerate(part.levels[l]):
            ax.plot(*zip(blocks[l - 1][child], blocks[l][parent]), color="0.4", lw=0.8)
    for level in blocks:
        ax.scatter(level[:, 0], level[:, 1], c="0.2", s=12, zorder=3)
    ax.scatter(leaves[:, 0], leaves[:, 1], c=_colors(groups, len(names)), s=40, zorder=4)
    for v, name in enumerate(names):
        ax.text(1.08 * leaves[v, 0], 1.08 * leaves[v, 1], name, fontsize=6, ha="center", va="center")
    ax.set_xlim(-1.3, 1.3)
    ax.set_ylim(-1.3, 1.3)
    ax.set_aspect("equal")
    ax.set_axis_off()
    ax.set_title(f"Nested blocks, B per level {part.B_per_level}")
    _save_svg(fig, path)
