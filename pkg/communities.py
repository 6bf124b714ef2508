"""Nested stochastic block model inference by description-length minimization.

The model is the microcanonical, non-degree-corrected, directed SBM. Level 0
partitions the vertices of the quantized multigraph; level l partitions the
blocks of level l-1, whose block multigraph is the graph seen at level l.
The hierarchy ends at a single block. Description lengths are in nats.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from typing import Optional

import numba
import numpy as np
from scipy.special import gammaln, xlogy
from sklearn.metrics import adjusted_rand_score, normalized_mutual_info_score

from graph_core import Digraph
from utils.errors import PartitionError

QUANTIZATION_MAX = 20

VERTEX_LEVEL = 0
BLOCK_LEVEL = 1
GREEDY = 0
METROPOLIS = 1


@dataclass(frozen=True)
class NsbmParams:
    n_sweeps: int = 1000
    anneal: bool = False
    agglomeration_factor: float = 2.0
    greedy_sweeps: int = 20

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SbmScoreParts:
    likelihood: tuple
    prior: tuple

    @property
    def total(self):
        return float(sum(self.likelihood) + sum(self.prior))


@dataclass(frozen=True, eq=False)
class HierPartition:
    levels: tuple
    description_length: float = float("nan")
    parts: Optional[SbmScoreParts] = None
    seed: Optional[int] = None

    @property
    def B_per_level(self):
        return [int(level.max()) + 1 for level in self.levels]

    @property
    def n_levels(self):
        return len(self.levels)

    def to_dict(self):
        return {
            "levels": [[int(x) for x in level] for level in self.levels],
            "description_length": self.description_length,
            "B_per_level": self.B_per_level,
            "likelihood": list(self.parts.likelihood) if self.parts else None,
            "prior": list(self.parts.prior) if self.parts else None,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc):
        levels = tuple(np.asarray(level, dtype=np.int64) for level in doc["levels"])
        parts = None
        if doc.get("likelihood") is not None:
            parts = SbmScoreParts(tuple(doc["likelihood"]), tuple(doc["prior"]))
        return cls(levels, doc.get("description_length", float("nan")), parts, doc.get("seed"))


def quantize(g):
    """Edge multiplicities: integer weights as-is, else max weight maps to 20."""
    W = g.weights
    if np.all(W == np.round(W)):
        return W.astype(np.int64)
    top = W.max()
    scale = QUANTIZATION_MAX / top
    return np.floor(W * scale + 0.5).astype(np.int64)


def canonical(labels):
    """Relabel blocks 0..B-1 in order of first appearance."""
    labels = np.asarray(labels, dtype=np.int64)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse].astype(np.int64)


def flat_partition(labels):
    """Single level under one top block (or just the level when it is one block)."""
    b = canonical(labels)
    B = int(b.max()) + 1
    levels = (b,) if B == 1 else (b, np.zeros(B, dtype=np.int64))
    return HierPartition(levels)


def _aggregate(A, b, B):
    """Block multigraph e[r, s] = sum of A over members of r and s."""
    onehot = np.zeros((A.shape[0], B), dtype=np.int64)
    onehot[np.arange(A.shape[0]), b] = 1
    return onehot.T @ A @ onehot


def _log_binom(a, k):
    return gammaln(a + 1.0) - gammaln(k + 1.0) - gammaln(a - k + 1.0)


def _partition_prior(b, N):
    B = int(b.max()) + 1
    sizes = np.bincount(b, minlength=B)
    return float(
        gammaln(N + 1) - np.sum(gammaln(sizes + 1)) + _log_binom(N - 1, B - 1) + np.log(N)
    )


def _vertex_likelihood(e, sizes):
    """-ln P(A | e, b) without the sum of ln A_ij!."""
    degree = e.sum(axis=1) + e.sum(axis=0)
    return float(np.sum(xlogy(degree, sizes)) - np.sum(gammaln(e + 1.0)))


def _pair_terms(m, counts):
    m = np.asarray(m, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    safe = np.where(m > 0, m, 1.0)
    out = gammaln(safe + counts) - gammaln(counts + 1.0) - gammaln(safe)
    return np.where(m > 0, out, 0.0)


def _block_likelihood(e, sizes):
    """-ln P(e_lower | e_upper, b): one multiset coefficient per block pair."""
    return float(np.sum(_pair_terms(np.outer(sizes, sizes), e)))


def _validate(n, levels):
    if not levels:
        raise PartitionError("A partition needs at least one level")
    expected = n
    for l, level in enumerate(levels):
        level = np.asarray(level)
        if level.ndim != 1 or level.shape[0] != expected:
            raise PartitionError(f"Level {l} assigns {level.shape} items, expected {expected}")
        if level.size and (level.min() < 0 or not np.issubdtype(level.dtype, np.integer)):
            raise PartitionError(f"Level {l} has invalid block ids")
        B = int(level.max()) + 1
        if np.unique(level).size != B:
            raise PartitionError(f"Level {l} is not surjective onto 0..{B - 1}")
        expected = B
    if expected != 1:
        raise PartitionError(f"Top level has {expected} blocks, expected 1")


def score_parts(g, part):
    A = quantize(g)
    levels = [np.asarray(level, dtype=np.int64) for level in part.levels]
    _validate(g.n, levels)

    likelihood, prior = [], []
    current = A
    for l, b in enumerate(levels):
        B = int(b.max()) + 1
        sizes = np.bincount(b, minlength=B)
        e = _aggregate(current, b, B)
        if l == 0:
            likelihood.append(float(np.sum(gammaln(A + 1.0))) + _vertex_likelihood(e, sizes))
        else:
            likelihood.append(_block_likelihood(e, sizes))
        prior.append(_partition_prior(b, current.shape[0]))
        current = e
    return SbmScoreParts(tuple(likelihood), tuple(prior))


def description_length(g, part):
    """-ln P(G, b) of the nested model, up to partition-independent constants."""
    return score_parts(g, part).total


def _size_terms(B, N, E):
    """Every B-dependent term outside the block pairs, with one block above."""
    return _log_binom(N - 1, B - 1) + _log_binom(B * B + E - 1, E) + np.log(B)


def _level_objective(A, b, kind, E):
    b = canonical(b)
    B = int(b.max()) + 1
    sizes = np.bincount(b, minlength=B)
    e = _aggregate(A, b, B)
    N = A.shape[0]
    if kind == VERTEX_LEVEL:
        fit = _vertex_likelihood(e, sizes)
    else:
        fit = _block_likelihood(e, sizes)
    return float(
        fit + gammaln(N + 1) - np.sum(gammaln(sizes + 1)) + np.log(N) + _size_terms(B, N, E)
    )


def merge_delta_matrix(e, sizes, kind, N, E):
    """Objective change of merging blocks r and s, for every pair at once."""
    e = np.asarray(e, dtype=np.float64)
    n = np.asarray(sizes, dtype=np.float64)
    B = n.size
    idx = np.arange(B)
    rr, ss = np.meshgrid(idx, idx, indexing="ij")
    et = e.T

    if kind == VERTEX_LEVEL:
        def lf(x):
            return gammaln(x + 1.0)

        degree = e.sum(axis=1) + e.sum(axis=0)
        own = xlogy(degree, n)
        delta = (
            xlogy(degree[:, None] + degree[None, :], n[:, None] + n[None, :])
            - own[:, None]
            - own[None, :]
        )
        rows = lf(e[:, None, :] + e[None, :, :]) - lf(e)[:, None, :] - lf(e)[None, :, :]
        cols = lf(et[:, None, :] + et[None, :, :]) - lf(et)[:, None, :] - lf(et)[None, :, :]
        shared = rows[rr, ss, rr] + rows[rr, ss, ss] + cols[rr, ss, rr] + cols[rr, ss, ss]
        inner_total = e[rr, rr] + e[rr, ss] + e[ss, rr] + e[ss, ss]
        inner = lf(inner_total) - lf(e[rr, rr]) - lf(e[rr, ss]) - lf(e[ss, rr]) - lf(e[ss, ss])
        delta -= rows.sum(axis=2) + cols.sum(axis=2) - shared + inner
    else:
        merged = n[:, None] + n[None, :]
        rows = (
            _pair_terms(merged[:, :, None] * n[None, None, :], e[:, None, :] + e[None, :, :])
            - _pair_terms(n[:, None, None] * n[None, None, :], e[:, None, :])
            - _pair_terms(n[None, :, None] * n[None, None, :], e[None, :, :])
        )
        cols = (
            _pair_terms(merged[:, :, None] * n[None, None, :], et[:, None, :] + et[None, :, :])
            - _pair_terms(n[:, None, None] * n[None, None, :], et[:, None, :])
            - _pair_terms(n[None, :, None] * n[None, None, :], et[None, :, :])
        )
        shared = rows[rr, ss, rr] + rows[rr, ss, ss] + cols[rr, ss, rr] + cols[rr, ss, ss]
        inner_total = e[rr, rr] + e[rr, ss] + e[ss, rr] + e[ss, ss]
        inner = (
            _pair_terms(merged**2, inner_total)
            - _pair_terms(n[rr] ** 2, e[rr, rr])
            - _pair_terms(n[rr] * n[ss], e[rr, ss])
            - _pair_terms(n[ss] * n[rr], e[ss, rr])
            - _pair_terms(n[ss] ** 2, e[ss, ss])
        )
        delta = rows.sum(axis=2) + cols.sum(axis=2) - shared + inner

    delta += (
        -gammaln(n[:, None] + n[None, :] + 1.0)
        + gammaln(n + 1.0)[:, None]
        + gammaln(n + 1.0)[None, :]
    )
    if B > 1:
        delta += _size_terms(B - 1, N, E) - _size_terms(B, N, E)
    np.fill_diagonal(delta, np.inf)
    return delta


def merge_delta(g, part, r, s):
    """DL change of merging level-0 blocks r and s of a single-level partition."""
    if part.n_levels > 2 or (part.n_levels == 2 and part.B_per_level[1] != 1):
        raise PartitionError("merge_delta applies to a single level under one top block")
    b = np.asarray(part.levels[0], dtype=np.int64)
    B = int(b.max()) + 1
    if r == s or not (0 <= r < B and 0 <= s < B):
        raise PartitionError(f"Cannot merge blocks {r} and {s} of {B}")
    A = quantize(g)
    e = _aggregate(A, b, B)
    sizes = np.bincount(b, minlength=B)
    return float(merge_delta_matrix(e, sizes, VERTEX_LEVEL, g.n, int(A.sum()))[r, s])


@numba.njit(nogil=True)
def _xlogy_scalar(a, x):
    if a == 0:
        return 0.0
    return a * math.log(float(x))


@numba.njit(nogil=True)
def _lf(k):
    return math.lgamma(k + 1.0)


@numba.njit(nogil=True)
def _pair_term(m, count):
    if m <= 0:
        return 0.0
    return math.lgamma(float(m + count)) - math.lgamma(count + 1.0) - math.lgamma(float(m))


@numba.njit(nogil=True)
def _log_binom_scalar(a, k):
    return math.lgamma(a + 1.0) - math.lgamma(k + 1.0) - math.lgamma(a - k + 1.0)


@numba.njit(nogil=True)
def _size_terms_scalar(B, N, E):
    return _log_binom_scalar(N - 1, B - 1) + _log_binom_scalar(B * B + E - 1, E) + math.log(float(B))


@numba.njit(nogil=True)
def _move_delta(kind, r, s, ko, ki, aii, out_i, in_i, e, n, out_e, in_e, active, B, N, E):
    nr, ns = n[r], n[s]
    nr2, ns2 = nr - 1, ns + 1
    kor = ko[r] - aii
    kir = ki[r] - aii
    new_rr = e[r, r] - kor - kir - aii
    new_rs = e[r, s] - ko[s] + kir
    new_sr = e[s, r] - ki[s] + kor
    new_ss = e[s, s] + ko[s] + ki[s] + aii
    d = 0.0

    if kind == VERTEX_LEVEL:
        for k in range(B):
            t = active[k]
            if t == r or t == s:
                continue
            d -= _lf(e[r, t] - ko[t]) - _lf(e[r, t]) + _lf(e[s, t] + ko[t]) - _lf(e[s, t])
            d -= _lf(e[t, r] - ki[t]) - _lf(e[t, r]) + _lf(e[t, s] + ki[t]) - _lf(e[t, s])
        d -= _lf(new_rr) - _lf(e[r, r]) + _lf(new_rs) - _lf(e[r, s])
        d -= _lf(new_sr) - _lf(e[s, r]) + _lf(new_ss) - _lf(e[s, s])
        deg_r = out_e[r] + in_e[r]
        deg_s = out_e[s] + in_e[s]
        k_i = out_i + in_i
        d += _xlogy_scalar(deg_r - k_i, nr2) - _xlogy_scalar(deg_r, nr)
        d += _xlogy_scalar(deg_s + k_i, ns2) - _xlogy_scalar(deg_s, ns)
    else:
        for k in range(B):
            t = active[k]
            if t == r or t == s:
                continue
            nt = n[t]
            d += _pair_term(nr2 * nt, e[r, t] - ko[t]) - _pair_term(nr * nt, e[r, t])
            d += _pair_term(ns2 * nt, e[s, t] + ko[t]) - _pair_term(ns * nt, e[s, t])
            d += _pair_term(nt * nr2, e[t, r] - ki[t]) - _pair_term(nt * nr, e[t, r])
            d += _pair_term(nt * ns2, e[t, s] + ki[t]) - _pair_term(nt * ns, e[t, s])
        d += _pair_term(nr2 * nr2, new_rr) - _pair_term(nr * nr, e[r, r])
        d += _pair_term(nr2 * ns2, new_rs) - _pair_term(nr * ns, e[r, s])
        d += _pair_term(ns2 * nr2, new_sr) - _pair_term(ns * nr, e[s, r])
        d += _pair_term(ns2 * ns2, new_ss) - _pair_term(ns * ns, e[s, s])

    d -= _lf(nr2) - _lf(nr) + _lf(ns2) - _lf(ns)
    if nr2 == 0:
        d += _size_terms_scalar(B - 1, N, E) - _size_terms_scalar(B, N, E)
    return d


@numba.njit(nogil=True)
def _apply_move(i, r, s, ko, ki, aii, out_i, in_i, b, e, n, out_e, in_e, active, pos, B):
    kor = ko[r] - aii
    kir = ki[r] - aii
    for k in range(B):
        t = active[k]
        if t == r or t == s:
            continue
        e[r, t] -= ko[t]
        e[s, t] += ko[t]
        e[t, r] -= ki[t]
        e[t, s] += ki[t]
    new_rr = e[r, r] - kor - kir - aii
    new_rs = e[r, s] - ko[s] + kir
    new_sr = e[s, r] - ki[s] + kor
    new_ss = e[s, s] + ko[s] + ki[s] + aii
    e[r, r] = new_rr
    e[r, s] = new_rs
    e[s, r] = new_sr
    e[s, s] = new_ss
    out_e[r] -= out_i
    out_e[s] += out_i
    in_e[r] -= in_i
    in_e[s] += in_i
    n[r] -= 1
    n[s] += 1
    b[i] = s
    if n[r] == 0:
        slot = pos[r]
        last = active[B - 1]
        active[slot] = last
        pos[last] = slot
        B -= 1
    return B


@numba.njit(nogil=True)
def _run_moves(A, out_a, in_a, b, e, n, out_e, in_e, active, pos, B, kind, E, mode,
               n_sweeps, uniforms, betas, best_b, trace):
    N = A.shape[0]
    ko = np.zeros(N, dtype=np.int64)
    ki = np.zeros(N, dtype=np.int64)
    n_trace = 0
    current = 0.0
    best = 0.0
    best_b[:] = b
    for sweep in range(n_sweeps):
        moved = 0
        for i in range(N):
            if B < 2:
                break
            r = b[i]
            ko[:] = 0
            ki[:] = 0
            for j in range(N):
                ko[b[j]] += A[i, j]
                ki[b[j]] += A[j, i]
            aii = A[i, i]
            if mode == GREEDY:
                best_d = -1e-10
                target = -1
                for k in range(B):
                    s = active[k]
                    if s == r:
                        continue
                    d = _move_delta(kind, r, s, ko, ki, aii, out_a[i], in_a[i], e, n,
                                    out_e, in_e, active, B, N, E)
                    if d < best_d:
                        best_d = d
                        target = s
                if target < 0:
                    continue
                s = target
                d = best_d
            else:
                u = uniforms[sweep * N + i]
                s = active[min(B - 1, int(u[0] * B))]
                if s == r:
                    continue
                d = _move_delta(kind, r, s, ko, ki, aii, out_a[i], in_a[i], e, n,
                                out_e, in_e, active, B, N, E)
                if d > 0 and u[1] >= math.exp(-betas[sweep] * d):
                    continue
            B = _apply_move(i, r, s, ko, ki, aii, out_a[i], in_a[i], b, e, n,
                            out_e, in_e, active, pos, B)
            moved += 1
            current += d
            if mode == GREEDY and n_trace < trace.shape[0]:
                trace[n_trace] = d
                n_trace += 1
            if current < best - 1e-12:
                best = current
                best_b[:] = b
        if mode == GREEDY and moved == 0:
            break
    return n_trace


def _moves(A, b, kind, E, mode, n_sweeps, rng=None, anneal=False):
    """Run greedy or Metropolis single-vertex moves; returns the best labels and the trace."""
    N = A.shape[0]
    b = np.array(b, dtype=np.int64)
    B = int(b.max()) + 1
    e = np.zeros((N, N), dtype=np.int64)
    e[:B, :B] = _aggregate(A, b, B)
    n = np.zeros(N, dtype=np.int64)
    n[:B] = np.bincount(b, minlength=B)
    out_e = e.sum(axis=1)
    in_e = e.sum(axis=0)
    active = np.zeros(N, dtype=np.int64)
    active[:B] = np.arange(B)
    pos = np.zeros(N, dtype=np.int64)
    pos[:B] = np.arange(B)

    if mode == METROPOLIS:
        uniforms = rng.random((n_sweeps * N, 2))
        if anneal and n_sweeps > 1:
            betas = np.linspace(1.0, 10.0, n_sweeps)
        else:
            betas = np.ones(n_sweeps)
    else:
        uniforms = np.zeros((0, 2))
        betas = np.ones(max(n_sweeps, 1))
    best_b = np.empty_like(b)
    trace = np.zeros(N * max(n_sweeps, 1))
    n_trace = _run_moves(
        A, A.sum(axis=1), A.sum(axis=0), b, e, n, out_e, in_e, active, pos, B,
        kind, E, mode, n_sweeps, uniforms, betas, best_b, trace,
    )
    return canonical(best_b), trace[:n_trace]


def _agglomerate(A, b, kind, E, target):
    """Merge blocks by smallest objective change until only target remain."""
    N = A.shape[0]
    b = canonical(b)
    B = int(b.max()) + 1
    while B > target:
        e = _aggregate(A, b, B)
        sizes = np.bincount(b, minlength=B)
        delta = merge_delta_matrix(e, sizes, kind, N, E)
        rs, ss = np.triu_indices(B, k=1)
        order = np.lexsort((ss, rs, delta[rs, ss]))
        mapping = np.arange(B)
        used = np.zeros(B, dtype=bool)
        merges = 0
        for k in order:
            r, s = rs[k], ss[k]
            if used[r] or used[s]:
                continue
            mapping[s] = r
            used[r] = used[s] = True
            merges += 1
            if merges == B - target:
                break
        b = canonical(mapping[b])
        B = int(b.max()) + 1
    return b


def _merge_descent(A, b, kind, E, params):
    """Apply the best single merge while it lowers the objective, polishing after each."""
    N = A.shape[0]
    b = canonical(b)
    objective = _level_objective(A, b, kind, E)
    while True:
        B = int(b.max()) + 1
        if B == 1:
            return b
        e = _aggregate(A, b, B)
        delta = merge_delta_matrix(e, np.bincount(b, minlength=B), kind, N, E)
        r, s = np.unravel_index(int(np.argmin(delta)), delta.shape)
        if not delta[r, s] < -1e-9:
            return b
        merged = canonical(np.where(b == s, r, b))
        polished, _ = _moves(A, merged, kind, E, GREEDY, params.greedy_sweeps)
        candidate = min(
            (merged, polished), key=lambda labels: _level_objective(A, labels, kind, E)
        )
        new_objective = _level_objective(A, candidate, kind, E)
        if not new_objective < objective - 1e-9:
            return b
        b, objective = candidate, new_objective


def _infer_level(A, kind, E, rng, params, require_fewer):
    N = A.shape[0]
    if N == 1:
        return np.zeros(1, dtype=np.int64)

    b = np.arange(N, dtype=np.int64)
    stages = []
    if not require_fewer:
        b, _ = _moves(A, b, kind, E, GREEDY, params.greedy_sweeps)
        stages.append((_level_objective(A, b, kind, E), b))
    B = int(b.max()) + 1
    while B > 1:
        target = min(B - 1, max(1, int(math.ceil(B / params.agglomeration_factor))))
        b = _agglomerate(A, b, kind, E, target)
        b, _ = _moves(A, b, kind, E, GREEDY, params.greedy_sweeps)
        B = int(b.max()) + 1
        if not require_fewer or B < N:
            stages.append((_level_objective(A, b, kind, E), b))

    descended = []
    for _, labels in stages:
        labels = _merge_descent(A, labels, kind, E, params)
        descended.append((_level_objective(A, labels, kind, E), labels))
    best_objective, best = min(descended, key=lambda stage: stage[0])
    if params.n_sweeps > 0 and int(best.max()) > 0:
        sampled, _ = _moves(A, best, kind, E, METROPOLIS, params.n_sweeps, rng, params.anneal)
        polished, _ = _moves(A, sampled, kind, E, GREEDY, params.greedy_sweeps)
        for candidate in (sampled, polished):
            objective = _level_objective(A, candidate, kind, E)
            if objective < best_objective - 1e-12:
                best_objective, best = objective, candidate
        best = _merge_descent(A, best, kind, E, params)
    return canonical(best)


def infer_nsbm(g, seed=0, params=None):
    """Infer levels bottom-up until a single block remains."""
    params = params or NsbmParams()
    if g.n == 0:
        raise PartitionError("Cannot partition an empty graph")
    rng = np.random.default_rng(seed)
    A = quantize(g)
    E = int(A.sum())

    levels = []
    current = A
    kind = VERTEX_LEVEL
    while True:
        b = _infer_level(current, kind, E, rng, params, require_fewer=kind == BLOCK_LEVEL)
        levels.append(b)
        B = int(b.max()) + 1
        if B == 1:
            break
        current = _aggregate(current, b, B)
        kind = BLOCK_LEVEL

    parts = score_parts(g, HierPartition(tuple(levels)))
    part = HierPartition(tuple(levels), parts.total, parts, seed)
    logging.info(f"nSBM seed={seed}: B per level {part.B_per_level}, DL={part.description_length:.3f}")
    return part


def refine_partition(g, part, sweeps=None, greedy=True, seed=0, anneal=False):
    """Single-vertex moves on level 0 of a single-level partition.

    Returns the new flat partition and the DL change of every accepted move.
    """
    A = quantize(g)
    b0 = np.asarray(part.levels[0], dtype=np.int64)
    if greedy:
        b, trace = _moves(A, b0, VERTEX_LEVEL, int(A.sum()), GREEDY, sweeps or 20)
    else:
        rng = np.random.default_rng(seed)
        b, trace = _moves(A, b0, VERTEX_LEVEL, int(A.sum()), METROPOLIS, sweeps or 100, rng, anneal)
    return flat_partition(b), trace


def infer_best(g, seeds, params=None, threads=None):
    """Best-of-seeds: lowest DL, ties resolved by seed order."""
    seeds = list(seeds)
    if not seeds:
        raise PartitionError("At least one seed is required")
    results = [None] * len(seeds)
    with ThreadPoolExecutor(max_workers=threads) as seed_executor:
        future_to_seed = {
            seed_executor.submit(infer_nsbm, g, seed, params): position
            for position, seed in enumerate(seeds)
        }
        for future in as_completed(future_to_seed):
            results[future_to_seed[future]] = future.result()
    return min(results, key=lambda part: part.description_length)


def project(part, level):
    """Vertex -> block map at the given level."""
    if not 0 <= level < part.n_levels:
        raise PartitionError(f"Level {level} outside 0..{part.n_levels - 1}")
    labels = np.asarray(part.levels[0], dtype=np.int64)
    for l in range(1, level + 1):
        labels = np.asarray(part.levels[l], dtype=np.int64)[labels]
    return labels


def nmi(partition_a, partition_b):
    a = np.asarray(partition_a)
    b = np.asarray(partition_b)
    if a.shape != b.shape:
        raise PartitionError("Partitions cover different vertex sets")
    return float(normalized_mutual_info_score(a, b, average_method="arithmetic"))


def adjusted_rand(partition_a, partition_b):
    a = np.asarray(partition_a)
    b = np.asarray(partition_b)
    if a.shape != b.shape:
        raise PartitionError("Partitions cover different vertex sets")
    return float(adjusted_rand_score(a, b))


def planted_partition_graph(block_sizes, p_in, p_out, seed=0):
    """Directed unit-weight graph with independent edges per ordered pair."""
    rng = np.random.default_rng(seed)
    truth = np.repeat(np.arange(len(block_sizes)), block_sizes)
    n = truth.size
    prob = np.where(truth[:, None] == truth[None, :], p_in, p_out)
    W = (rng.random((n, n)) < prob).astype(np.float64)
    np.fill_diagonal(W, 0.0)
    return Digraph(tuple(f"v{i}" for i in range(n)), W), truth
