"""K-means with k-means++ seeding and seeded restarts."""
import logging

import numpy as np
from scipy.spatial.distance import cdist

from src.clustering.graph import Parcellation
from src.errors import BadK

logger = logging.getLogger(__name__)


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Pick k seeds, each with probability proportional to squared distance to the nearest seed so far."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = cdist(X, centers[:1], "sqeuclidean")[:, 0]
    for c in range(1, k):
        total = closest.sum()
        pick = rng.choice(n, p=closest / total) if total > 0 else rng.integers(n)
        centers[c] = X[pick]
        closest = np.minimum(closest, cdist(X, centers[c:c + 1], "sqeuclidean")[:, 0])
    return centers


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int, tol: float):
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        dist = cdist(X, centers, "sqeuclidean")
        labels = dist.argmin(axis=1)
        point_dist = dist[np.arange(X.shape[0]), labels]
        history.append(float(point_dist.sum()))

        new_centers = centers.copy()
        taken = set()
        for c in range(centers.shape[0]):
            members = labels == c
            if members.any():
                new_centers[c] = X[members].mean(axis=0)
                continue
            # empty cluster: move it onto the worst-fitted point
            order = np.argsort(-point_dist, kind="stable")
            far = next(int(i) for i in order if int(i) not in taken)
            taken.add(far)
            new_centers[c] = X[far]
            point_dist[far] = 0.0
        shift = float(((new_centers - centers) ** 2).sum())
        centers = new_centers
        if shift < tol:
            break

    dist = cdist(X, centers, "sqeuclidean")
    labels = dist.argmin(axis=1)
    inertia = float(dist[np.arange(X.shape[0]), labels].sum())
    history.append(inertia)
    return labels, centers, inertia, history, n_iter


def kmeans(X_items, k: int, seed: int = 0, n_init: int = 10, max_iter: int = 300, tol: float = 1e-6) -> Parcellation:
    """Best of ``n_init`` seeded k-means++ / Lloyd runs by (inertia, restart index).

    Rows of X_items are the items. The returned parcellation carries the
    centers, the final inertia and the per-iteration inertia history of the
    winning run.
    """
    X = np.asarray(X_items, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    n = X.shape[0]
    if not 1 <= k <= n:
        raise BadK(f"need 1 <= k <= n_items, got k={k}, n_items={n}")

    best = None
    for run, child in enumerate(np.random.SeedSequence(seed).spawn(n_init)):
        rng = np.random.default_rng(child)
        result = _lloyd(X, kmeans_plusplus(X, k, rng), max_iter, tol)
        logger.debug(f"kmeans run {run}: inertia={result[2]:.6g} after {result[4]} iterations")
        if best is None or result[2] < best[2]:
            best = result

    labels, centers, inertia, history, _ = best
    return Parcellation(labels, k, "kmeans", centers=centers, inertia=inertia, history=history)
