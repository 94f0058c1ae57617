"""
Connectivity-constrained Ward agglomeration of voxels (feature agglomeration).

Only graph-adjacent clusters may merge. The merge cost is the Ward increase
in within-cluster variance, recomputed from cluster centroids for every new
adjacent pair; heap entries of merged clusters are skipped lazily.
"""
import heapq
import logging

import numpy as np
from scipy import sparse

from src.clustering.graph import Parcellation, VoxelGraph, relabel_by_appearance
from src.errors import ConfigError, LengthMismatch, TooManyClusters

logger = logging.getLogger(__name__)


def ward_cost(size_a: int, size_b: int, mean_a: np.ndarray, mean_b: np.ndarray) -> float:
    diff = mean_a - mean_b
    return float(size_a * size_b / (size_a + size_b) * (diff @ diff))


def ward_agglomerate(X, graph: VoxelGraph, n_clusters: int) -> Parcellation:
    """Merge adjacent voxel clusters bottom-up until ``n_clusters`` remain.

    X is (samples, voxels); each voxel is described by its column. Ties in
    cost go to the smallest (cluster id, partner id); merged clusters get new
    ids n_voxels, n_voxels + 1, ... When the graph has more components than
    ``n_clusters`` the component labeling is returned with ``feasible=False``.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[1]
    if graph.n_nodes != n:
        raise LengthMismatch(f"graph has {graph.n_nodes} nodes, X has {n} voxels")
    if n_clusters < 1:
        raise ConfigError(f"n_clusters must be >= 1, got {n_clusters}")
    if n_clusters > n:
        raise TooManyClusters(f"n_clusters={n_clusters} exceeds {n} voxels")

    means = {v: X[:, v].copy() for v in range(n)}
    sizes = {v: 1 for v in range(n)}
    neighbors = {v: set(nb) for v, nb in enumerate(graph.neighbor_lists())}
    parent = np.arange(2 * n - 1)

    heap = [(ward_cost(1, 1, means[i], means[j]), int(i), int(j)) for i, j in graph.edges]
    heapq.heapify(heap)

    merges = []
    next_id = n
    n_active = n
    while n_active > n_clusters and heap:
        cost, a, b = heapq.heappop(heap)
        if a not in sizes or b not in sizes:
            continue
        new = next_id
        next_id += 1
        size = sizes[a] + sizes[b]
        means[new] = (sizes[a] * means[a] + sizes[b] * means[b]) / size
        sizes[new] = size
        neighbors[new] = (neighbors[a] | neighbors[b]) - {a, b}
        for old in (a, b):
            parent[old] = new
            del means[old], sizes[old]
            for c in neighbors.pop(old):
                if c in neighbors:
                    neighbors[c].discard(old)
        for c in sorted(neighbors[new]):
            neighbors[c].add(new)
            heapq.heappush(heap, (ward_cost(sizes[c], size, means[c], means[new]), c, new))
        merges.append((a, b, cost, new))
        n_active -= 1

    feasible = n_active == n_clusters
    if not feasible:
        logger.warning(f"InfeasibleClusterCount: graph has {n_active} components, "
                       f"cannot reach {n_clusters} clusters; returning the components")

    roots = np.arange(n)
    for _ in range(len(merges) + 1):
        up = parent[roots]
        if np.array_equal(up, roots):
            break
        roots = up
    labels = relabel_by_appearance(roots)
    logger.debug(f"Ward: {len(merges)} merges, {n_active} clusters")
    return Parcellation(labels, int(labels.max()) + 1, "ward", feasible=feasible, merges=merges)


def _membership(p: Parcellation) -> sparse.csr_matrix:
    """(n_clusters, n_voxels) indicator matrix."""
    n = p.labels.size
    return sparse.csr_matrix((np.ones(n), (p.labels, np.arange(n))), shape=(p.n_clusters, n))


def agglomeration_transform(p: Parcellation, X) -> np.ndarray:
    """Per-cluster mean of member columns: (samples, n_clusters)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.shape[1] != p.labels.size:
        raise LengthMismatch(f"X has {X.shape[1]} voxels, parcellation has {p.labels.size}")
    sums = np.asarray(_membership(p) @ X.T).T
    return sums / p.sizes


def agglomeration_inverse(p: Parcellation, R) -> np.ndarray:
    """Broadcast each cluster value back to its voxels: (samples, n_voxels)."""
    R = np.asarray(R, dtype=np.float64)
    if R.ndim == 1:
        R = R[np.newaxis, :]
    if R.shape[1] != p.n_clusters:
        raise LengthMismatch(f"R has {R.shape[1]} columns, parcellation has {p.n_clusters} clusters")
    return R[:, p.labels]
