import numpy as np
import pytest

from src.errors import ConfigError, LengthMismatch
from src.estimators.pipeline import EstimatorSpec
from src.evaluation.cross_validation import kfold
from src.imaging.volume import BrainMask
from src.mapping.searchlight import build_spheres, searchlight_map

SPEC = EstimatorSpec("logreg_l2", {"C": 1.0})


def _full_mask(shape, affine=None):
    return BrainMask(np.ones(shape, dtype=bool), np.eye(4) if affine is None else affine)


def test_sphere_sizes_isotropic():
    mask = _full_mask((5, 5, 5))
    index = build_spheres(mask, 1.0)
    sizes = index.sizes.reshape((5, 5, 5), order="F")
    assert sizes[2, 2, 2] == 7
    assert sizes[0, 0, 0] == 4
    assert sizes[0, 2, 2] == 6


def test_sphere_sizes_anisotropic():
    mask = _full_mask((5, 5, 5), np.diag([3.0, 1.0, 1.0, 1.0]))
    sizes = build_spheres(mask, 2.0).sizes.reshape((5, 5, 5), order="F")
    # x steps are 3 mm, so the sphere is a disc in the y/z plane
    assert sizes[2, 2, 2] == 13


def test_sphere_contains_center_and_is_sorted():
    index = build_spheres(_full_mask((4, 3, 2)), 1.5)
    for c, neighbors in enumerate(index.neighbors):
        assert c in neighbors
        assert np.all(np.diff(neighbors) > 0)


def test_bad_radius():
    with pytest.raises(ConfigError):
        build_spheres(_full_mask((3, 3, 3)), 0.0)


def _blob_data(seed=0):
    shape = (6, 6, 6)
    mask = _full_mask(shape)
    rng = np.random.default_rng(seed)
    y = np.tile([0, 1], 20)
    X = rng.standard_normal((40, mask.n_voxels))
    informative = np.zeros(shape, dtype=bool)
    informative[1:3, 1:3, 1:3] = True
    cols = np.flatnonzero(informative.ravel(order="F"))
    X[np.ix_(y == 1, cols)] += 3.0
    return X, y, mask, cols


def test_searchlight_localizes_blob():
    X, y, mask, cols = _blob_data()
    index = build_spheres(mask, 1.0)
    scores = searchlight_map(X, y, index, kfold(40, 4), SPEC, progress=False)
    assert scores.shape == (mask.n_voxels,)
    assert np.all(scores[cols] >= 0.9)
    # centers whose sphere never touches the blob sit near chance
    far = [c for c in range(mask.n_voxels) if not np.intersect1d(index.neighbors[c], cols).size]
    assert np.mean(scores[far]) < 0.7
    assert np.argmax(scores) in cols


def test_searchlight_threads_match_serial():
    X, y, mask, _ = _blob_data(seed=1)
    index = build_spheres(mask, 1.0)
    plan = kfold(40, 4)
    serial = searchlight_map(X, y, index, plan, SPEC, n_jobs=1, progress=False)
    threaded = searchlight_map(X, y, index, plan, SPEC, n_jobs=4, progress=False)
    np.testing.assert_array_equal(serial, threaded)


def test_searchlight_validates_inputs():
    X, y, mask, _ = _blob_data()
    index = build_spheres(mask, 1.0)
    with pytest.raises(LengthMismatch):
        searchlight_map(X[:, :10], y, index, kfold(40, 4), SPEC, progress=False)
    with pytest.raises(ConfigError):
        searchlight_map(X, y, index, kfold(40, 4), EstimatorSpec("ridge"), progress=False)
