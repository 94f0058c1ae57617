import logging

import numpy as np
import pytest

from src.clustering.graph import count_regions, grid_to_graph, relabel_by_appearance
from src.clustering.kmeans import kmeans
from src.clustering.ward import agglomeration_inverse, agglomeration_transform, ward_agglomerate
from src.errors import BadK, TooManyClusters
from src.imaging.volume import BrainMask


def _mask(flags):
    return BrainMask(np.asarray(flags, dtype=bool), np.eye(4))


# =============================================================================
# GRAPH
# =============================================================================

def test_grid_to_graph_edge_count():
    graph = grid_to_graph(_mask(np.ones((3, 3, 3))))
    # 3 axes x 2 steps x 9 lines
    assert graph.n_edges == 54
    assert graph.n_components == 1
    assert np.all(graph.edges[:, 0] < graph.edges[:, 1])


def test_grid_to_graph_skips_unmasked():
    flags = np.zeros((3, 1, 1), dtype=bool)
    flags[[0, 2], 0, 0] = True
    graph = grid_to_graph(_mask(flags))
    assert graph.n_edges == 0
    assert graph.n_components == 2


def test_relabel_by_appearance():
    np.testing.assert_array_equal(relabel_by_appearance(np.array([7, 7, 3, 9, 3])), [0, 0, 1, 2, 1])


# =============================================================================
# WARD
# =============================================================================

def test_ward_chain_splits_at_largest_gap():
    mask = _mask(np.ones((4, 1, 1)))
    X = np.array([[0.0, 1.0, 10.0, 11.0]])
    p = ward_agglomerate(X, grid_to_graph(mask), 2)
    np.testing.assert_array_equal(p.labels, [0, 0, 1, 1])
    assert p.feasible
    assert len(p.merges) == 2
    # first merge is the (0, 1) pair at cost 1/2 * 1
    assert p.merges[0] == (0, 1, 0.5, 4)


def test_ward_clusters_are_connected():
    rng = np.random.default_rng(0)
    mask = _mask(np.ones((5, 5, 5)))
    X = rng.standard_normal((8, mask.n_voxels))
    p = ward_agglomerate(X, grid_to_graph(mask), 10)
    assert p.n_clusters == 10
    assert count_regions(p.labels, mask) == 10
    assert p.sizes.sum() == mask.n_voxels


def test_ward_respects_connectivity_over_similarity():
    # voxels 0 and 2 are identical but only connected through voxel 1
    mask = _mask(np.ones((3, 1, 1)))
    X = np.array([[0.0, 100.0, 0.0]])
    p = ward_agglomerate(X, grid_to_graph(mask), 2)
    # equal costs: the lower (cluster, partner) pair merges first
    np.testing.assert_array_equal(p.labels, [0, 0, 1])


def test_ward_infeasible_returns_components(caplog):
    flags = np.zeros((5, 1, 1), dtype=bool)
    flags[[0, 1, 3, 4], 0, 0] = True
    mask = _mask(flags)
    with caplog.at_level(logging.WARNING):
        p = ward_agglomerate(np.zeros((1, 4)), grid_to_graph(mask), 1)
    assert not p.feasible
    np.testing.assert_array_equal(p.labels, [0, 0, 1, 1])
    assert "InfeasibleClusterCount" in caplog.text


def test_ward_too_many_clusters():
    mask = _mask(np.ones((2, 1, 1)))
    with pytest.raises(TooManyClusters):
        ward_agglomerate(np.zeros((1, 2)), grid_to_graph(mask), 3)


def test_agglomeration_transform_and_inverse():
    mask = _mask(np.ones((4, 1, 1)))
    X = np.array([[0.0, 1.0, 10.0, 11.0], [2.0, 4.0, 6.0, 8.0]])
    p = ward_agglomerate(X[:1], grid_to_graph(mask), 2)
    reduced = agglomeration_transform(p, X)
    np.testing.assert_allclose(reduced, [[0.5, 10.5], [3.0, 7.0]])
    np.testing.assert_allclose(agglomeration_inverse(p, reduced)[0], [0.5, 0.5, 10.5, 10.5])


# =============================================================================
# K-MEANS
# =============================================================================

def test_kmeans_one_dimensional():
    X = np.array([[0.0], [0.1], [10.0], [10.1]])
    p = kmeans(X, 2, seed=0, n_init=5)
    np.testing.assert_allclose(np.sort(p.centers[:, 0]), [0.05, 10.05])
    assert p.labels[0] == p.labels[1] != p.labels[2] == p.labels[3]
    assert p.inertia == pytest.approx(0.01)


def test_kmeans_history_non_increasing_and_seeded():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(c, 0.5, size=(30, 3)) for c in (0.0, 4.0, 8.0)])
    p = kmeans(X, 3, seed=2)
    assert np.all(np.diff(p.history) <= 1e-9)
    assert p.history[-1] == pytest.approx(p.inertia)
    q = kmeans(X, 3, seed=2)
    np.testing.assert_array_equal(p.labels, q.labels)


@pytest.mark.parametrize("k", [0, 5])
def test_kmeans_bad_k(k):
    with pytest.raises(BadK):
        kmeans(np.zeros((4, 2)), k)


def test_ward_reaches_large_cluster_count():
    rng = np.random.default_rng(3)
    mask = _mask(np.ones((15, 15, 15)))
    X = rng.standard_normal((3, mask.n_voxels))
    p = ward_agglomerate(X, grid_to_graph(mask), 1000)
    assert p.n_clusters == 1000
    assert np.all(p.sizes > 0)
    assert count_regions(p.labels, mask) == 1000


@pytest.mark.parametrize("seed", range(5))
def test_ward_random_masks_stay_connected(seed):
    rng = np.random.default_rng(seed)
    flags = np.zeros((6, 6, 6), dtype=bool)
    flags[1:5, 1:5, 1:5] = rng.random((4, 4, 4)) > 0.2
    mask = _mask(flags)
    graph = grid_to_graph(mask)
    n_clusters = max(graph.n_components, 8)
    p = ward_agglomerate(rng.standard_normal((4, mask.n_voxels)), graph, n_clusters)
    assert p.feasible
    assert count_regions(p.labels, mask) == p.n_clusters
