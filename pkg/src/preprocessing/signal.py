"""
Per-voxel time-series cleaning on (time x voxels) matrices.

Order when combined: detrend -> bandpass -> standardize.
"""
import logging

import numpy as np
from scipy import fft, signal

from config.pipeline import CleanConfig
from src.errors import TooFewTimepoints

logger = logging.getLogger(__name__)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return X[:, np.newaxis] if X.ndim == 1 else X


def detrend(X) -> np.ndarray:
    """Remove the least-squares line a*t + b from every column."""
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise TooFewTimepoints(f"detrend needs at least 2 timepoints, got {X.shape[0]}")
    return signal.detrend(X, axis=0, type="linear")


def standardize(X) -> np.ndarray:
    """Zero mean, unit population variance per column; constant columns become 0."""
    X = _as_matrix(X)
    centered = X - X.mean(axis=0)
    sd = X.std(axis=0)
    # variance below round-off of the column scale counts as constant
    scale = np.abs(X).max(axis=0, initial=0.0)
    flat = sd <= 1e-12 * np.maximum(scale, 1e-300)
    out = np.zeros_like(centered)
    out[:, ~flat] = centered[:, ~flat] / sd[~flat]
    return out


def bandpass(X, cfg: CleanConfig) -> np.ndarray:
    """Ideal FFT band filter: bins outside [low_cut_hz, high_cut_hz] are zeroed.

    Bin k sits at k / (nt * tr). The DC bin is removed whenever a positive
    low cut is set.
    """
    cfg.check_band()
    X = _as_matrix(X)
    if not cfg.filters:
        return X.copy()
    nt = X.shape[0]
    spectrum = fft.rfft(X, axis=0)
    freqs = fft.rfftfreq(nt, d=cfg.tr_seconds)
    reject = np.zeros(freqs.shape, dtype=bool)
    if cfg.low_cut_hz is not None:
        reject |= freqs < cfg.low_cut_hz
        if cfg.low_cut_hz > 0:
            reject[0] = True
    if cfg.high_cut_hz is not None:
        reject |= freqs > cfg.high_cut_hz
    spectrum[reject] = 0.0
    return fft.irfft(spectrum, n=nt, axis=0)


def clean_signals(X, cfg: CleanConfig) -> np.ndarray:
    """Apply the enabled cleaning steps in order."""
    X = _as_matrix(X)
    if cfg.detrend:
        X = detrend(X)
    if cfg.filters:
        X = bandpass(X, cfg)
    if cfg.standardize:
        X = standardize(X)
    logger.debug(f"Cleaned {X.shape} (detrend={cfg.detrend}, band=({cfg.low_cut_hz}, {cfg.high_cut_hz}), "
                 f"standardize={cfg.standardize})")
    return X
