"""
Voxel adjacency graphs and parcellation containers.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from src.errors import LengthMismatch
from src.imaging.volume import BrainMask


@dataclass
class VoxelGraph:
    """Undirected graph over masked voxels (feature order); edges are (i, j) with i < j."""
    n_nodes: int
    edges: np.ndarray  # (n_edges, 2)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def adjacency(self) -> sparse.csr_matrix:
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * self.n_edges)
        return sparse.csr_matrix((data, (np.concatenate([i, j]), np.concatenate([j, i]))),
                                 shape=(self.n_nodes, self.n_nodes))

    def connected_components(self) -> Tuple[int, np.ndarray]:
        return csgraph.connected_components(self.adjacency(), directed=False)

    @property
    def n_components(self) -> int:
        return int(self.connected_components()[0])

    def neighbor_lists(self) -> List[List[int]]:
        adj = self.adjacency()
        return [adj.indices[adj.indptr[v]:adj.indptr[v + 1]].tolist() for v in range(self.n_nodes)]


def grid_to_graph(mask: BrainMask) -> VoxelGraph:
    """6-neighborhood edges between masked voxels."""
    flat = np.full(int(np.prod(mask.shape)), -1, dtype=np.int64)
    flat[mask.flat_indices] = np.arange(mask.n_voxels)
    ids = flat.reshape(mask.shape, order="F")

    pairs = []
    for axis in range(3):
        a = np.moveaxis(ids, axis, 0)[:-1].ravel()
        b = np.moveaxis(ids, axis, 0)[1:].ravel()
        keep = (a >= 0) & (b >= 0)
        pairs.append(np.column_stack([np.minimum(a[keep], b[keep]), np.maximum(a[keep], b[keep])]))
    edges = np.vstack(pairs) if pairs else np.empty((0, 2), dtype=np.int64)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    return VoxelGraph(mask.n_voxels, edges)


@dataclass
class Parcellation:
    """Cluster id per voxel, ids 0..n_clusters-1 in order of first appearance."""
    labels: np.ndarray
    n_clusters: int
    method: str
    feasible: bool = True
    centers: Optional[np.ndarray] = None
    inertia: Optional[float] = None
    history: List[float] = field(default_factory=list)
    merges: List[Tuple[int, int, float, int]] = field(default_factory=list)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_clusters)


def relabel_by_appearance(labels: np.ndarray) -> np.ndarray:
    """Map arbitrary ids to 0..K-1 in order of first occurrence."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inverse]


def count_regions(labels, mask: BrainMask) -> int:
    """Number of 6-connected spatial regions summed over clusters."""
    labels = np.asarray(labels)
    if labels.size != mask.n_voxels:
        raise LengthMismatch(f"{labels.size} labels for {mask.n_voxels} voxels")
    flat = np.full(int(np.prod(mask.shape)), -1, dtype=np.int64)
    flat[mask.flat_indices] = labels
    volume = flat.reshape(mask.shape, order="F")
    total = 0
    for cluster in np.unique(labels):
        _, n = ndimage.label(volume == cluster)
        total += n
    return int(total)
