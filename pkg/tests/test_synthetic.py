import numpy as np
import pytest

from src.errors import BadShape
from src.estimators.regression import fit_ridge
from src.imaging.masking import apply_mask
from src.ingestion.synthetic import (HEAD_BASELINE, default_affine, make_decoding, make_encoding, make_rest,
                                     retinotopic_positions)


def test_default_affine_is_centered():
    affine = default_affine((5, 5, 5))
    np.testing.assert_allclose(affine[:3, :3], 2.0 * np.eye(3))
    np.testing.assert_allclose(affine @ [2, 2, 2, 1], [0, 0, 0, 1])


# =============================================================================
# DECODING
# =============================================================================

def test_make_decoding_structure():
    ds = make_decoding(shape=(10, 10, 10), n_per_class=12, snr=4.0, seed=3)
    assert ds.volume.shape == (10, 10, 10, 24)
    np.testing.assert_array_equal(ds.labels[:4], [0, 1, 0, 1])
    assert ds.truth_support.any()
    assert not (ds.truth_support & ~ds.head.flags).any()
    assert not ds.volume.data[~ds.head.flags].any()


def test_make_decoding_signal_lives_in_truth():
    ds = make_decoding(shape=(10, 10, 10), n_per_class=40, snr=5.0, seed=0)
    X = apply_mask(ds.volume, ds.head)
    diff = X[ds.labels == 1].mean(axis=0) - X[ds.labels == 0].mean(axis=0)
    truth = ds.truth_support.ravel(order="F")[ds.head.flags.ravel(order="F")]
    assert np.all(diff[truth] > 3.0)
    assert np.all(np.abs(diff[~truth]) < 1.5)
    assert abs(X[ds.labels == 0].mean() - HEAD_BASELINE) < 0.1


def test_make_decoding_is_seeded():
    a = make_decoding(seed=5)
    b = make_decoding(seed=5)
    c = make_decoding(seed=6)
    np.testing.assert_array_equal(a.volume.data, b.volume.data)
    assert not np.array_equal(a.volume.data, c.volume.data)


@pytest.mark.parametrize("kwargs", [{"shape": (7, 10, 10)}, {"shape": (10, 10)}, {"n_per_class": 5}])
def test_make_decoding_rejects_bad_arguments(kwargs):
    with pytest.raises(BadShape):
        make_decoding(**kwargs)


# =============================================================================
# ENCODING
# =============================================================================

def test_retinotopic_positions_walk_a_snake():
    positions = retinotopic_positions(81)
    assert positions[:3] == [(0, 0), (0, 1), (0, 2)]
    assert positions[9] == (1, 8)
    assert len(set(positions)) == 81


def test_make_encoding_structure():
    es = make_encoding(n_trials=60, n_voxels=20, seed=1)
    assert es.stimuli.shape == (60, 100)
    np.testing.assert_array_equal(es.stimuli[0] + es.stimuli[1], 1)
    assert es.afferent.sum() == 16
    assert not es.true_fields[~es.afferent].any()
    assert np.all((es.true_fields[es.afferent] > 0).sum(axis=1) == 4)
    assert es.volume.shape == (20, 1, 1, 60)


def test_noiseless_encoding_is_recovered_by_ridge():
    es = make_encoding(n_trials=240, n_voxels=10, noise_sigma=0.0, seed=2)
    model = fit_ridge(es.stimuli, es.bold, alpha=0.0)
    np.testing.assert_allclose(model.coef, es.true_fields, atol=1e-8)


@pytest.mark.parametrize("n_trials", [48, 101])
def test_make_encoding_rejects_bad_trial_counts(n_trials):
    with pytest.raises(BadShape):
        make_encoding(n_trials=n_trials)


# =============================================================================
# RESTING STATE
# =============================================================================

def test_make_rest_structure():
    rest = make_rest(n_subjects=3, nt=40, shape=(8, 8, 8), n_networks=4, seed=0)
    assert len(rest.subjects) == 3
    assert rest.subjects[0].shape == (40, 512)
    assert rest.true_maps.shape == (4, 512)
    corr = np.corrcoef(rest.true_maps)
    assert np.all(np.abs(corr[np.triu_indices(4, 1)]) <= 0.3)
    assert rest.subject_volume(1).shape == (8, 8, 8, 40)


@pytest.mark.parametrize("kwargs", [{"n_networks": 0}, {"n_networks": 9}, {"nt": 2}, {"n_subjects": 0}])
def test_make_rest_rejects_bad_arguments(kwargs):
    with pytest.raises(BadShape):
        make_rest(**kwargs)


def test_lasso_lars_receptive_fields_sit_on_true_patch():
    from src.estimators.regression import fit_lasso_lars_cv

    es = make_encoding(noise_sigma=0.5, seed=0)
    shares = []
    for v in np.flatnonzero(es.afferent)[:5]:
        model = fit_lasso_lars_cv(es.stimuli, es.bold[:, v], n_folds=5, max_iter=10)
        mass = np.abs(model.coef[0])
        shares.append(mass[es.true_fields[v] > 0].sum() / mass.sum())
    assert np.mean(shares) >= 0.6
