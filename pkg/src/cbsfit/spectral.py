"""Normalised spectral clustering of an affinity graph (Ng-Jordan-Weiss)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .errors import ParameterError

KMEANS_RESTARTS = 10
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-8


@dataclass
class Labeling:
    labels: np.ndarray
    n_c: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_c):
            raise ParameterError("labels outside [0, n_c)")


def spectral_embed(G, n_c: int) -> np.ndarray:
    """Row-normalised top-``n_c`` eigenvectors of ``D^-1/2 G D^-1/2``.

    Zero-degree vertices get zero rows.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    if G.shape != (n, n):
        raise ParameterError("G must be square")
    if n_c > n:
        raise ParameterError(f"n_c={n_c} exceeds the number of points {n}")
    if n_c < 1:
        raise ParameterError("n_c must be at least 1")
    deg = G.sum(axis=1)
    live = deg > 0
    inv_sqrt = np.zeros(n)
    inv_sqrt[live] = 1.0 / np.sqrt(deg[live])
    M = G * inv_sqrt[:, None] * inv_sqrt[None, :]
    M = 0.5 * (M + M.T)
    _, vecs = eigh(M, subset_by_index=[n - n_c, n - 1])
    vecs = vecs[:, ::-1]
    norms = np.linalg.norm(vecs, axis=1)
    out = np.zeros_like(vecs)
    ok = live & (norms > 0)
    out[ok] = vecs[ok] / norms[ok, None]
    return out


def _kmeanspp(X, n_c, rng):
    n = len(X)
    centers = np.empty((n_c, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, n_c):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers[c] = X[idx]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1))
    return centers


def _assign(X, centers):
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels, d2[np.arange(len(X)), labels]


def _lloyd(X, centers, max_iter, tol):
    n_c = len(centers)
    for _ in range(max_iter):
        labels, dist = _assign(X, centers)
        new = np.empty_like(centers)
        for c in range(n_c):
            members = labels == c
            if members.any():
                new[c] = X[members].mean(axis=0)
            else:
                # reseed an empty cluster at the worst-served point
                far = int(dist.argmax())
                new[c] = X[far]
                dist[far] = 0.0
        shift = np.abs(new - centers).max()
        centers = new
        if shift <= tol:
            break
    labels, dist = _assign(X, centers)
    return labels, float(dist.sum())


def kmeans(X, n_c: int, restarts: int = KMEANS_RESTARTS, rng=None, *,
           max_iter: int = KMEANS_MAX_ITER, tol: float = KMEANS_TOL):
    """Best-of-``restarts`` Lloyd k-means with k-means++ seeding.

    Returns ``(labels, wcss)``.
    """
    X = np.asarray(X, dtype=float)
    if restarts < 1:
        raise ParameterError("restarts must be at least 1")
    if n_c < 1 or n_c > len(X):
        raise ParameterError(f"n_c={n_c} must lie in [1, {len(X)}]")
    rng = np.random.default_rng(rng)
    best = None
    for _ in range(restarts):
        labels, wcss = _lloyd(X, _kmeanspp(X, n_c, rng), max_iter, tol)
        if best is None or wcss < best[1]:
            best = (labels, wcss)
    return best


def spectral_clustering(G, n_c: int, rng=None, restarts: int = KMEANS_RESTARTS) -> Labeling:
    G = np.asarray(G, dtype=float)
    if n_c == 1:
        return Labeling(np.zeros(G.shape[0], dtype=np.intp), 1)
    emb = spectral_embed(G, n_c)
    labels, _ = kmeans(emb, n_c, restarts, rng)
    return Labeling(labels, n_c)
