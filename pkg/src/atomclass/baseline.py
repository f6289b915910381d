"""Graph-only baseline: Laplacian eigenvectors followed by seeded k-means."""
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .numerics import sym_eig

LAPLACIANS = ("unnormalized", "symmetric-normalized")


@dataclass(frozen=True)
class SpectralConfig:
    K: int = 3
    laplacian_kind: str = "symmetric-normalized"
    kmeans_restarts: int = 10
    kmeans_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ParameterError("K", f"must be an integer >= 2, got {self.K!r}")
        if self.laplacian_kind not in LAPLACIANS:
            raise ParameterError("laplacian_kind", f"must be one of {LAPLACIANS}, got {self.laplacian_kind!r}")
        if int(self.kmeans_restarts) != self.kmeans_restarts or self.kmeans_restarts < 1:
            raise ParameterError("kmeans_restarts", f"must be >= 1, got {self.kmeans_restarts!r}")
        if int(self.kmeans_iters) != self.kmeans_iters or self.kmeans_iters < 1:
            raise ParameterError("kmeans_iters", f"must be >= 1, got {self.kmeans_iters!r}")


def laplacian(adjacency, kind="symmetric-normalized"):
    """Graph Laplacian. Isolated nodes get a zero row in the normalized variant."""
    A = np.asarray(adjacency, dtype=float)
    deg = A.sum(axis=1)
    if kind == "unnormalized":
        return np.diag(deg) - A
    if kind == "symmetric-normalized":
        inv_sqrt = np.zeros_like(deg)
        nz = deg > 0
        inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
        L = -(inv_sqrt[:, None] * A * inv_sqrt[None, :])
        L[np.diag_indices_from(L)] += nz.astype(float)
        return L
    raise ValueError(f"unknown Laplacian kind {kind!r}")


def spectral_embedding(adjacency, K, kind="symmetric-normalized"):
    """Eigenvectors of the ``K`` smallest Laplacian eigenvalues, as rows."""
    eig = sym_eig(laplacian(adjacency, kind))
    # sym_eig is descending; the tail holds the smallest eigenvalues
    U = eig.eigenvectors[:, ::-1][:, :K]
    if kind == "symmetric-normalized":
        norms = np.linalg.norm(U, axis=1, keepdims=True)
        U = U / np.where(norms > 0, norms, 1.0)
    return U


def assignment_inertia(points, labels):
    """Within-cluster sum of squares with each cluster at its mean."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    total = 0.0
    for k in np.unique(labels):
        block = X[labels == k]
        total += float(np.sum((block - block.mean(axis=0)) ** 2))
    return total


def _sq_dists(points, centers):
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _plus_plus(points, K, rng):
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers.append(points[idx])
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(points, centers, iters):
    K = centers.shape[0]
    labels = np.argmin(_sq_dists(points, centers), axis=1)
    for _ in range(iters):
        for k in range(K):
            members = labels == k
            if members.any():
                centers[k] = points[members].mean(axis=0)
            else:
                # reseed from the point worst served by its current center
                far = np.argmax(((points - centers[labels]) ** 2).sum(axis=1))
                centers[k] = points[far]
                labels[far] = k
        new = np.argmin(_sq_dists(points, centers), axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
    return labels, centers


def kmeans(points, K, restarts=10, iters=100, seed=0):
    """Lloyd's algorithm from k-means++ starts; the lowest-inertia restart wins.

    Ties in inertia go to the earlier restart. Returns the assignment as an
    integer array of length ``n``.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if K < 1 or n < K:
        raise ValueError(f"need 1 <= K <= n, got K={K}, n={n}")
    if K == 1:
        return np.zeros(n, dtype=np.int64)
    rng = np.random.default_rng(seed)
    best, best_inertia = None, np.inf
    for _ in range(restarts):
        labels, _ = _lloyd(X, _plus_plus(X, K, rng), iters)
        inertia = assignment_inertia(X, labels)
        if inertia < best_inertia:
            best, best_inertia = labels, inertia
    return best.astype(np.int64)


def spectral_cluster(adjacency, config):
    """Cluster assignment from the Laplacian embedding."""
    A = np.asarray(adjacency, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.array_equal(A, A.T):
        raise ValueError("adjacency must be symmetric and square")
    if np.any(np.diag(A) != 0):
        raise ValueError("adjacency must have a zero diagonal")
    U = spectral_embedding(A, config.K, config.laplacian_kind)
    return kmeans(U, config.K, config.kmeans_restarts, config.kmeans_iters, config.seed)
