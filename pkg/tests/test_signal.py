import numpy as np
import pytest

from config.pipeline import CleanConfig
from src.errors import BadBand, TooFewTimepoints
from src.preprocessing.signal import bandpass, clean_signals, detrend, standardize


def test_detrend_removes_line():
    t = np.arange(50.0)
    X = np.column_stack([3.0 * t + 2.0, -0.5 * t])
    np.testing.assert_allclose(detrend(X), 0.0, atol=1e-10)


def test_detrend_needs_two_points():
    with pytest.raises(TooFewTimepoints):
        detrend(np.ones((1, 3)))


def test_standardize_columns():
    rng = np.random.default_rng(0)
    X = rng.normal(5.0, 3.0, size=(100, 4))
    Z = standardize(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-12)


def test_standardize_constant_column_is_zero():
    X = np.column_stack([np.full(10, 4.0), np.arange(10.0)])
    Z = standardize(X)
    assert not Z[:, 0].any()


def test_bandpass_keeps_in_band_sine():
    tr = 1.0
    nt = 200
    t = np.arange(nt) * tr
    slow = np.sin(2 * np.pi * 0.05 * t)
    fast = np.sin(2 * np.pi * 0.4 * t)
    cfg = CleanConfig(low_cut_hz=0.01, high_cut_hz=0.1, tr_seconds=tr)
    out = bandpass((slow + fast)[:, np.newaxis], cfg)[:, 0]
    np.testing.assert_allclose(out, slow, atol=1e-10)


def test_bandpass_low_cut_removes_mean():
    cfg = CleanConfig(low_cut_hz=0.01, tr_seconds=2.0)
    out = bandpass(np.full((64, 1), 3.0), cfg)
    np.testing.assert_allclose(out, 0.0, atol=1e-12)


@pytest.mark.parametrize("low, high", [(0.2, 0.1), (None, 0.3), (0.3, None)])
def test_bad_band(low, high):
    # Nyquist is 0.25 Hz at tr = 2 s
    cfg = CleanConfig(low_cut_hz=low, high_cut_hz=high, tr_seconds=2.0)
    with pytest.raises(BadBand):
        cfg.check_band()


def test_clean_signals_order():
    rng = np.random.default_rng(1)
    t = np.arange(80.0)
    X = np.outer(t, [1.0, -2.0]) + rng.standard_normal((80, 2))
    cfg = CleanConfig(detrend=True, standardize=True)
    out = clean_signals(X, cfg)
    np.testing.assert_allclose(out, standardize(detrend(X)))
    assert CleanConfig().is_noop
