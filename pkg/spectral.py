"""Combinatorial and magnetic Laplacians, Hermitian eigensolver, torus phases.

The magnetic Laplacian of charge q couples u and v with
    -w_s(u, v) * exp(2*pi*i*q*a(v, u)),  a(v, u) = w(u, v) - w(v, u),
on top of the degree diagonal d(u) = sum_v w_s(u, v). The normalized form
is the symmetric I - D^-1/2 (W_s o Gamma) D^-1/2.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.sparse.csgraph import connected_components
from sklearn.metrics import silhouette_score

from graph_core import decompose
from utils.diagnostics import warn
from utils.errors import SpectralError

DEFAULT_CHARGE = 0.1
HERMITIAN_TOL = 1e-12
UNDEFINED_PHASE_TOL = 1e-12
R_MINOR = 1.0
R_FLOOR = 0.1
R_MAJOR = 3.0


@dataclass(frozen=True, eq=False)
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    q: float = 0.0
    normalized: bool = False

    def residuals(self, H):
        """||H v - lambda v|| per eigenpair."""
        V = self.eigenvectors
        return np.linalg.norm(H @ V - V * self.eigenvalues, axis=0)


@dataclass(frozen=True, eq=False)
class TorusEmbedding:
    names: tuple
    theta1: np.ndarray
    theta2: np.ndarray
    r: np.ndarray
    defined: np.ndarray
    q: float

    @property
    def xyz(self):
        ring = R_MAJOR + self.r * np.cos(self.theta2)
        return np.column_stack(
            [ring * np.cos(self.theta1), ring * np.sin(self.theta1), self.r * np.sin(self.theta2)]
        )

    def to_frame(self):
        x, y, z = self.xyz.T
        return pd.DataFrame(
            {
                "vertex": list(self.names),
                "theta1": self.theta1,
                "theta2": self.theta2,
                "r": self.r,
                "x": x,
                "y": y,
                "z": z,
            }
        )


def _check_charge(q):
    if not 0.0 <= q <= 1.0:
        raise SpectralError(f"Charge q must lie in [0, 1], got {q}")


def _degrees(W_s, g, normalized):
    d = W_s.sum(axis=1)
    if normalized and np.any(d <= 0):
        isolated = int(np.flatnonzero(d <= 0)[0])
        raise SpectralError(f"Vertex '{g.names[isolated]}' is isolated; cannot normalize")
    return d


def _hermitian_from_upper(M):
    """Mirror the strict upper triangle as its conjugate; diagonal made real."""
    upper = np.triu(M, k=1)
    return upper + upper.conj().T + np.diag(np.real(np.diag(M))).astype(M.dtype)


def combinatorial_laplacian(g, normalized=False):
    """L = D - W_s of the symmetrized graph, or I - D^-1/2 W_s D^-1/2."""
    W_s = decompose(g).symmetric
    d = _degrees(W_s, g, normalized)
    if not normalized:
        return np.diag(d) - W_s
    scale = 1.0 / np.sqrt(d)
    return np.eye(g.n) - scale[:, None] * W_s * scale[None, :]


def phase_matrix(g, q):
    """gamma_q(u, v) = exp(2*pi*i*q*a(v, u))."""
    _check_charge(q)
    flow = decompose(g).flow
    return np.exp(2j * np.pi * q * flow.T)


def magnetic_laplacian(g, q=DEFAULT_CHARGE, normalized=False):
    _check_charge(q)
    W_s = decompose(g).symmetric
    d = _degrees(W_s, g, normalized)
    coupling = W_s * phase_matrix(g, q)
    if normalized:
        scale = 1.0 / np.sqrt(d)
        M = np.eye(g.n, dtype=complex) - scale[:, None] * coupling * scale[None, :]
    else:
        M = np.diag(d).astype(complex) - coupling
    return _hermitian_from_upper(M)


def _fix_gauge(v):
    """Rotate so the largest-magnitude component is real and positive."""
    pivot = v[int(np.argmax(np.abs(v)))]
    return v * (np.conj(pivot) / abs(pivot))


def hermitian_eigs(H, k=None):
    """k smallest eigenpairs of a Hermitian matrix through its real embedding.

    [[Re H, -Im H], [Im H, Re H]] carries every eigenvalue of H twice; each
    cluster of duplicated eigenvalues is folded back into a complex basis and
    diagonalized on that subspace.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise SpectralError(f"Expected a square matrix, got shape {H.shape}")
    n = H.shape[0]
    k = n if k is None else int(k)
    if not 1 <= k <= n:
        raise SpectralError(f"Requested {k} eigenpairs of a {n}x{n} matrix")
    if np.max(np.abs(H - H.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise SpectralError("Matrix is not Hermitian")

    real_form = np.block([[H.real, -H.imag], [H.imag, H.real]])
    values, vectors = linalg.eigh(real_form)
    complex_vectors = vectors[:n] + 1j * vectors[n:]

    scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
    tol = 1e-8 * scale
    clusters = []
    start = 0
    for i in range(1, 2 * n + 1):
        if i == 2 * n or values[i] - values[i - 1] > tol:
            clusters.append((start, i))
            start = i

    eigenvalues, eigenvectors = [], []
    for lo, hi in clusters:
        U, s, _ = np.linalg.svd(complex_vectors[:, lo:hi], full_matrices=False)
        basis = U[:, s > 0.5]
        if basis.shape[1] == 0:
            continue
        sub_values, sub_vectors = linalg.eigh(basis.conj().T @ H @ basis)
        for value, coefficients in zip(sub_values, sub_vectors.T):
            v = basis @ coefficients
            v = v / np.linalg.norm(v)
            eigenvalues.append(float(np.real(np.vdot(v, H @ v))))
            eigenvectors.append(v)
        if len(eigenvalues) >= k:
            break
    if len(eigenvalues) < k:
        raise SpectralError(f"Eigensolver recovered {len(eigenvalues)} of {k} eigenpairs")

    order = np.argsort(eigenvalues, kind="stable")[:k]
    V = np.column_stack([_fix_gauge(eigenvectors[i]) for i in order])
    return SpectralResult(np.array(eigenvalues)[order], V)


def laplacian_spectrum(g, q=DEFAULT_CHARGE, normalized=False):
    return hermitian_eigs(magnetic_laplacian(g, q, normalized)).eigenvalues


def magnetic_eigs(g, q=DEFAULT_CHARGE, normalized=True, k=None):
    result = hermitian_eigs(magnetic_laplacian(g, q, normalized), k)
    return SpectralResult(result.eigenvalues, result.eigenvectors, q, normalized)


def radii(hub, n):
    """r = R_MINOR * (1 - hub / max(hub)) + R_FLOOR; hubs sit near the axis."""
    if hub is None:
        return np.full(n, R_MINOR + R_FLOOR)
    hub = np.asarray(hub, dtype=np.float64)
    top = hub.max() if hub.size else 0.0
    hub_norm = hub / top if top > 0 else np.zeros(n)
    return R_MINOR * (1.0 - hub_norm) + R_FLOOR


def torus_embedding(g, q=DEFAULT_CHARGE, hub=None):
    """Phases of the two lowest normalized eigenvectors, per connected component."""
    _check_charge(q)
    W_s = decompose(g).symmetric
    n_components, labels = connected_components(W_s > 0, directed=False)
    theta = np.full((g.n, 2), np.nan)
    defined = np.zeros((g.n, 2), dtype=bool)

    for component in range(n_components):
        members = np.flatnonzero(labels == component)
        if members.size < 2:
            continue
        sub = W_s[np.ix_(members, members)]
        d = sub.sum(axis=1)
        scale = 1.0 / np.sqrt(d)
        flow = g.weights[np.ix_(members, members)] - g.weights[np.ix_(members, members)].T
        coupling = sub * np.exp(2j * np.pi * q * flow)
        H = _hermitian_from_upper(
            np.eye(members.size, dtype=complex) - scale[:, None] * coupling * scale[None, :]
        )
        result = hermitian_eigs(H, min(2, members.size))
        for j in range(result.eigenvectors.shape[1]):
            v = result.eigenvectors[:, j]
            ok = np.abs(v) > UNDEFINED_PHASE_TOL
            theta[members[ok], j] = np.mod(np.angle(v[ok]), 2 * np.pi)
            defined[members[ok], j] = True

    undefined = [g.names[u] for u in range(g.n) if not defined[u].all()]
    if undefined:
        warn("undefined_phase", vertices=undefined)
    logging.info(f"Torus embedding over {n_components} component(s) at q={q}")
    return TorusEmbedding(g.names, theta[:, 0], theta[:, 1], radii(hub, g.n), defined, q)


def frustration(g, q, theta):
    """eta = sum_{u,v} w_s |e^{i theta_u} - gamma_q(u,v) e^{i theta_v}|^2 / (2 vol).

    The sum runs over ordered pairs, so each undirected edge counts twice:
    two vertices pi apart at q = 0 score 2.
    """
    _check_charge(q)
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (g.n,) or not np.all(np.isfinite(theta)):
        raise SpectralError("theta must be a finite angle for every vertex")
    W_s = decompose(g).symmetric
    vol = W_s.sum()
    if vol <= 0:
        raise SpectralError("Graph volume is zero")
    z = np.exp(1j * theta)
    mismatch = np.abs(z[:, None] - phase_matrix(g, q) * z[None, :]) ** 2
    return float(np.sum(W_s * mismatch) / (2.0 * vol))


def angular_silhouette(embedding, groups):
    """Silhouette of groups under the wrapped distance between (theta1, theta2) pairs."""
    ok = embedding.defined.all(axis=1)
    labels = np.asarray(groups)[ok]
    n_groups = np.unique(labels).size
    if not 2 <= n_groups < labels.size:
        raise SpectralError(f"Silhouette needs 2..{labels.size - 1} groups, got {n_groups}")
    theta = np.column_stack([embedding.theta1, embedding.theta2])[ok]
    gap = np.abs(theta[:, None, :] - theta[None, :, :])
    wrapped = np.minimum(gap, 2 * np.pi - gap)
    distance = np.sqrt(np.sum(wrapped**2, axis=2))
    return float(silhouette_score(distance, labels, metric="precomputed"))
