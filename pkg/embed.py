"""Biased second-order random walks and skip-gram vertex embeddings."""

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from gensim.models import Word2Vec

from graph_core import decompose
from utils.errors import EmbeddingError


@dataclass(frozen=True)
class WalkParams:
    walk_length: int = 80
    walks_per_vertex: int = 10
    p: float = 1.0
    q: float = 1.0
    symmetrize: bool = False

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EmbedParams:
    dims: int = 64
    window: int = 5
    negative: int = 5
    epochs: int = 5
    lr: float = 0.025
    min_lr: float = 0.0001

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class WalkCorpus:
    # round-major: walk k * n + v starts at vertex v
    walks: tuple
    names: tuple
    params: WalkParams
    seed: int

    def __len__(self):
        return len(self.walks)

    def sentences(self):
        return [[str(v) for v in walk] for walk in self.walks]


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    names: tuple
    vectors: np.ndarray

    @property
    def dims(self):
        return self.vectors.shape[1]

    def index(self, vertex):
        if isinstance(vertex, (int, np.integer)) and 0 <= vertex < len(self.names):
            return int(vertex)
        try:
            return self.names.index(vertex)
        except ValueError:
            raise EmbeddingError(f"Unknown vertex: {vertex}") from None

    def vector(self, vertex):
        return self.vectors[self.index(vertex)]

    def cosine(self, u, v):
        return _cosine(self.vector(u), self.vector(v))

    def to_frame(self):
        frame = pd.DataFrame(self.vectors, columns=[f"v{j}" for j in range(self.dims)])
        frame.insert(0, "vertex", list(self.names))
        return frame


def _cosine(a, b):
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0:
        return 0.0
    return float(np.dot(a, b) / norm)


def _check_walk_params(params):
    if params.walk_length < 1 or params.walks_per_vertex < 1:
        raise EmbeddingError("Walk length and walks per vertex must be positive")
    if params.p <= 0 or params.q <= 0:
        raise EmbeddingError(f"Return and in-out parameters must be positive, got p={params.p}, q={params.q}")


def _walks_from(W, start, params, seed):
    rng = np.random.default_rng([seed, start])
    walks = []
    for _ in range(params.walks_per_vertex):
        walk = [start]
        while len(walk) < params.walk_length:
            current = walk[-1]
            neighbors = np.flatnonzero(W[current] > 0)
            if neighbors.size == 0:
                break
            weights = W[current, neighbors]
            if len(walk) > 1:
                previous = walk[-2]
                bias = np.where(W[previous, neighbors] > 0, 1.0, 1.0 / params.q)
                bias[neighbors == previous] = 1.0 / params.p
                weights = weights * bias
            walk.append(int(rng.choice(neighbors, p=weights / weights.sum())))
        walks.append(tuple(walk))
    return walks


def generate_walks(g, params=None, seed=0, threads=None):
    """walks_per_vertex walks from every vertex, following out-edges."""
    params = params or WalkParams()
    _check_walk_params(params)
    if g.n_edges == 0:
        raise EmbeddingError("Cannot walk on a graph without edges")
    W = decompose(g).symmetric if params.symmetrize else g.weights

    per_vertex = [None] * g.n
    with ThreadPoolExecutor(max_workers=threads) as walk_executor:
        future_to_vertex = {
            walk_executor.submit(_walks_from, W, v, params, seed): v for v in range(g.n)
        }
        for future in as_completed(future_to_vertex):
            per_vertex[future_to_vertex[future]] = future.result()

    walks = tuple(per_vertex[v][k] for k in range(params.walks_per_vertex) for v in range(g.n))
    return WalkCorpus(walks, g.names, params, seed)


def _stable_hash(token):
    return zlib.crc32(token.encode("utf-8"))


def train_embeddings(corpus, params=None, seed=0):
    """Skip-gram with negative sampling, one worker so updates run in a fixed order."""
    params = params or EmbedParams()
    if len(corpus) == 0:
        raise EmbeddingError("Cannot train on an empty corpus")
    model = Word2Vec(
        sentences=corpus.sentences(),
        vector_size=params.dims,
        window=params.window,
        min_count=1,
        sg=1,
        hs=0,
        negative=params.negative,
        ns_exponent=0.75,
        sample=0,
        alpha=params.lr,
        min_alpha=params.min_lr,
        epochs=params.epochs,
        seed=seed,
        workers=1,
        hashfxn=_stable_hash,
    )
    vectors = np.zeros((len(corpus.names), params.dims))
    for v in range(len(corpus.names)):
        token = str(v)
        if token in model.wv.key_to_index:
            vectors[v] = model.wv[token]
    if not np.all(np.isfinite(vectors)):
        raise EmbeddingError("Training produced non-finite vectors")
    logging.info(f"Trained {params.dims}-dimensional embeddings for {len(corpus.names)} vertices")
    return EmbeddingTable(corpus.names, vectors)


def embed_graph(g, walk_params=None, embed_params=None, seed=0, threads=None):
    return train_embeddings(generate_walks(g, walk_params, seed, threads), embed_params, seed)


def most_similar(table, vertex, k=5):
    """Top-k by cosine, query excluded, ties to the lower vertex id."""
    query = table.index(vertex)
    n = len(table.names)
    if not 1 <= k < n:
        raise EmbeddingError(f"k must lie in 1..{n - 1}, got {k}")
    scores = [(table.names[v], _cosine(table.vectors[query], table.vectors[v]), v) for v in range(n) if v != query]
    scores.sort(key=lambda item: (-item[1], item[2]))
    return [(name, score) for name, score, _ in scores[:k]]
