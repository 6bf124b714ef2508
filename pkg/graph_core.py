"""Weighted digraph type, symmetric/antisymmetric split and (de)serialization."""

import json
import logging
from collections import namedtuple
from dataclasses import dataclass
from pathlib import Path
from xml.etree.ElementTree import ParseError

import networkx as nx
import numpy as np
import pydot

from utils.errors import GraphError, GraphFormatError

FORMATS = ("json", "graphml", "dot")
WEIGHT_ATTR = "w"
NAME_ATTR = "name"

Decomposition = namedtuple("Decomposition", ["symmetric", "antisymmetric", "flow"])


@dataclass(frozen=True, eq=False)
class Digraph:
    """Dense weight matrix W with W[u, v] = w(u -> v); zero means no edge."""

    names: tuple
    weights: np.ndarray

    def __post_init__(self):
        names = tuple(str(name) for name in self.names)
        W = np.array(self.weights, dtype=np.float64, copy=True)
        n = len(names)
        if n == 0:
            raise GraphError("A graph needs at least one vertex")
        if W.shape != (n, n):
            raise GraphError(f"Weight matrix {W.shape} does not match {n} vertices")
        if len(set(names)) != n:
            raise GraphError(f"Vertex names are not unique: {names}")
        if not np.all(np.isfinite(W)) or np.any(W < 0):
            raise GraphError("Edge weights must be finite and non-negative")
        if np.any(np.diag(W) != 0):
            loop = int(np.flatnonzero(np.diag(W))[0])
            raise GraphError(f"Self-loop on vertex '{names[loop]}'")
        W.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "weights", W)

    @classmethod
    def from_edges(cls, names, edges):
        """Build from (u, v, w) triples; u and v are indices or names."""
        names = tuple(str(name) for name in names)
        index = {name: i for i, name in enumerate(names)}
        W = np.zeros((len(names), len(names)))
        seen = set()
        for u, v, w in edges:
            u = index[u] if isinstance(u, str) else int(u)
            v = index[v] if isinstance(v, str) else int(v)
            if not (0 <= u < len(names) and 0 <= v < len(names)):
                raise GraphError(f"Edge ({u}, {v}) references an unknown vertex")
            if (u, v) in seen:
                raise GraphError(f"Duplicate edge ({names[u]}, {names[v]})")
            seen.add((u, v))
            W[u, v] = float(w)
        return cls(names, W)

    def __eq__(self, other):
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.weights, other.weights)

    __hash__ = None

    @property
    def n(self):
        return len(self.names)

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise GraphError(f"Unknown vertex '{name}'") from None

    def edges(self):
        """Positive-weight edges as (u, v, w), row-major."""
        us, vs = np.nonzero(self.weights)
        return [(int(u), int(v), float(self.weights[u, v])) for u, v in zip(us, vs)]

    @property
    def n_edges(self):
        return int(np.count_nonzero(self.weights))

    @property
    def out_strength(self):
        return self.weights.sum(axis=1)

    @property
    def in_strength(self):
        return self.weights.sum(axis=0)

    @property
    def out_degree(self):
        return np.count_nonzero(self.weights, axis=1)

    @property
    def in_degree(self):
        return np.count_nonzero(self.weights, axis=0)

    def with_weights(self, weights):
        return Digraph(self.names, weights)

    def to_networkx(self):
        G = nx.DiGraph()
        for i, name in enumerate(self.names):
            G.add_node(i, name=name)
        for u, v, w in self.edges():
            G.add_edge(u, v, weight=w)
        return G


def decompose(g):
    """w_s = (W + W^T)/2, w_a = (W - W^T)/2 and flow a(v, u) = 2 w_a(u, v)."""
    W = g.weights
    symmetric = 0.5 * (W + W.T)
    antisymmetric = 0.5 * (W - W.T)
    return Decomposition(symmetric, antisymmetric, W.T - W)


def induced_subgraph(g, vertices):
    """Keep the given vertices (indices or names) in their original order."""
    indices = set()
    for v in vertices:
        i = g.index(v) if isinstance(v, str) else int(v)
        if not 0 <= i < g.n:
            raise GraphError(f"Vertex index {i} is out of range for {g.n} vertices")
        indices.add(i)
    if not indices:
        raise GraphError("Vertex subset is empty")
    keep = sorted(indices)
    return Digraph(tuple(g.names[i] for i in keep), g.weights[np.ix_(keep, keep)])


def _to_json(g):
    doc = {"vertices": list(g.names), "edges": [[u, v, w] for u, v, w in g.edges()]}
    return json.dumps(doc, indent=1).encode("utf-8")


def _from_json(data):
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise GraphFormatError("json", f"line {e.lineno}, column {e.colno}", e.msg) from e
    if not isinstance(doc, dict) or "vertices" not in doc or "edges" not in doc:
        raise GraphFormatError("json", "document root", "expected keys 'vertices' and 'edges'")
    edges = []
    for i, edge in enumerate(doc["edges"]):
        if not (isinstance(edge, list) and len(edge) == 3):
            raise GraphFormatError("json", f"edges[{i}]", "expected [u, v, w]")
        u, v, w = edge
        if not isinstance(u, int) or not isinstance(v, int) or not isinstance(w, (int, float)):
            raise GraphFormatError("json", f"edges[{i}]", "expected integer endpoints and a number")
        edges.append((u, v, w))
    return Digraph.from_edges(doc["vertices"], edges)


def _to_graphml(g):
    G = nx.DiGraph()
    for i, name in enumerate(g.names):
        G.add_node(f"n{i}", **{NAME_ATTR: name})
    for u, v, w in g.edges():
        G.add_edge(f"n{u}", f"n{v}", **{WEIGHT_ATTR: float(w)})
    return "\n".join(nx.generate_graphml(G)).encode("utf-8")


def _from_graphml(data):
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        G = nx.parse_graphml(text)
    except ParseError as e:
        line, column = e.position
        raise GraphFormatError("graphml", f"line {line}, column {column}", str(e)) from e
    except nx.NetworkXError as e:
        raise GraphFormatError("graphml", "document", str(e)) from e
    if not G.is_directed() or G.is_multigraph():
        raise GraphFormatError("graphml", "graph element", "expected a simple directed graph")
    order = {node: i for i, node in enumerate(G.nodes)}
    names = [G.nodes[node].get(NAME_ATTR, str(node)) for node in G.nodes]
    edges = []
    for u, v, attrs in G.edges(data=True):
        if WEIGHT_ATTR not in attrs:
            raise GraphFormatError("graphml", f"edge {u}->{v}", f"missing '{WEIGHT_ATTR}' attribute")
        edges.append((order[u], order[v], float(attrs[WEIGHT_ATTR])))
    return Digraph.from_edges(names, edges)


def _to_dot(g):
    dot = pydot.Dot(graph_name="G", graph_type="digraph", strict=True)
    for i, name in enumerate(g.names):
        dot.add_node(pydot.Node(f"n{i}", label=json.dumps(name, ensure_ascii=False)))
    for u, v, w in g.edges():
        dot.add_edge(pydot.Edge(f"n{u}", f"n{v}", w=f"{w:.17g}"))
    return dot.to_string().encode("utf-8")


def _unquote(value):
    value = str(value)
    while len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        try:
            decoded = json.loads(value)
        except json.JSONDecodeError:
            return value[1:-1]
        if not isinstance(decoded, str):
            return value[1:-1]
        value = decoded
    return value


def _from_dot(data):
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        graphs = pydot.graph_from_dot_data(text)
    except Exception as e:
        location = f"line {getattr(e, 'lineno', '?')}, column {getattr(e, 'col', '?')}"
        raise GraphFormatError("dot", location, str(e)) from e
    if not graphs:
        raise GraphFormatError("dot", "document", "no graph could be parsed")
    dot = graphs[0]
    if dot.get_type() != "digraph":
        raise GraphFormatError("dot", "graph header", "expected a digraph")

    order = {}
    names = []
    for node in dot.get_nodes():
        node_id = _unquote(node.get_name())
        if node_id in ("node", "edge", "graph") or node_id in order:
            continue
        order[node_id] = len(names)
        label = node.get_attributes().get("label")
        names.append(_unquote(label) if label is not None else node_id)
    edges = []
    for edge in dot.get_edges():
        u, v = _unquote(edge.get_source()), _unquote(edge.get_destination())
        if u not in order or v not in order:
            raise GraphFormatError("dot", f"edge {u}->{v}", "endpoint has no node statement")
        weight = edge.get_attributes().get(WEIGHT_ATTR)
        if weight is None:
            raise GraphFormatError("dot", f"edge {u}->{v}", f"missing '{WEIGHT_ATTR}' attribute")
        try:
            edges.append((order[u], order[v], float(_unquote(weight))))
        except ValueError as e:
            raise GraphFormatError("dot", f"edge {u}->{v}", str(e)) from e
    return Digraph.from_edges(names, edges)


_WRITERS = {"json": _to_json, "graphml": _to_graphml, "dot": _to_dot}
_READERS = {"json": _from_json, "graphml": _from_graphml, "dot": _from_dot}


def export(g, fmt):
    """Serialize to bytes in one of json, graphml or dot."""
    if fmt not in _WRITERS:
        raise GraphError(f"Unknown graph format: {fmt}")
    return _WRITERS[fmt](g)


def import_graph(data, fmt):
    if fmt not in _READERS:
        raise GraphError(f"Unknown graph format: {fmt}")
    return _READERS[fmt](data)


def _format_of(path):
    fmt = Path(path).suffix.lstrip(".").lower()
    if fmt not in FORMATS:
        raise GraphError(f"Cannot infer graph format from '{path}'")
    return fmt


def write_graph(g, path):
    path = Path(path)
    try:
        path.write_bytes(export(g, _format_of(path)))
    except OSError as e:
        logging.error(f"Error writing graph to {path}: {e}")
        raise GraphError(f"Unable to write the graph to {path}. Error: {e}") from e


def read_graph(path):
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        logging.error(f"Error reading graph from {path}: {e}")
        raise GraphError(f"Unable to read the graph from {path}. Error: {e}") from e
    return import_graph(data, _format_of(path))
