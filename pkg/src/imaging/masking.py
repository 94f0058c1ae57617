"""
Conversion between 4D volumes and 2D samples x features matrices.

Feature j of a masked matrix is the j-th selected voxel in x-fastest scan
order (see BrainMask.flat_indices).
"""
import logging

import numpy as np
from scipy import ndimage

from src.errors import BadShape, ConfigError, EmptyMask, LengthMismatch
from src.imaging.volume import BrainMask, Volume4D

logger = logging.getLogger(__name__)

DEFAULT_LOWER_Q = 0.2
DEFAULT_UPPER_Q = 0.85


def compute_mask(mean_vol: Volume4D, lower_q: float = DEFAULT_LOWER_Q,
                 upper_q: float = DEFAULT_UPPER_Q) -> BrainMask:
    """Threshold a mean image halfway between two quantiles of its nonzero voxels.

    Constant images keep every nonzero voxel (the strict comparison is relaxed
    to >= when the threshold reaches the maximum).
    """
    if not 0.0 <= lower_q < upper_q <= 1.0:
        raise ConfigError(f"need 0 <= lower_q < upper_q <= 1, got {lower_q}, {upper_q}")
    if mean_vol.n_frames != 1:
        raise BadShape(f"compute_mask expects a single-frame volume, got {mean_vol.n_frames} frames")

    image = mean_vol.frame(0)
    nonzero = image[image != 0]
    if nonzero.size == 0:
        raise EmptyMask("volume has no nonzero voxels")

    threshold = 0.5 * (np.quantile(nonzero, lower_q) + np.quantile(nonzero, upper_q))
    flags = image > threshold
    if not flags.any() and threshold >= nonzero.max():
        flags = (image >= threshold) & (image != 0)
    if not flags.any():
        raise EmptyMask(f"no voxel above threshold {threshold:.6g}")

    logger.debug(f"compute_mask: threshold={threshold:.6g}, {int(flags.sum())} voxels")
    return BrainMask(flags, mean_vol.affine)


def apply_mask(vol: Volume4D, mask: BrainMask) -> np.ndarray:
    """(nt, n_voxels) matrix of masked voxel time series."""
    mask.check_compatible(vol.shape, vol.affine)
    flat = vol.data.reshape(-1, vol.n_frames, order="F")
    return np.ascontiguousarray(flat[mask.flat_indices].T)


def unmask(rows: np.ndarray, mask: BrainMask) -> Volume4D:
    """Scatter rows of a (n, n_voxels) matrix, or a single row, back into a volume."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[np.newaxis, :]
    if rows.ndim != 2:
        raise BadShape(f"expected a row or a 2D matrix, got shape {rows.shape}")
    if rows.shape[1] != mask.n_voxels:
        raise LengthMismatch(f"rows have {rows.shape[1]} features, mask has {mask.n_voxels} voxels")

    flat = np.zeros((int(np.prod(mask.shape)), rows.shape[0]))
    flat[mask.flat_indices] = rows.T
    return Volume4D(flat.reshape((*mask.shape, rows.shape[0]), order="F"), mask.affine)


def smooth_volume(vol: Volume4D, size: int) -> Volume4D:
    """3D box blur of every frame with a cubic window of ``size`` voxels."""
    if size <= 1:
        return vol
    data = ndimage.uniform_filter(vol.data, size=(size, size, size, 1), mode="constant")
    return Volume4D(data, vol.affine, vol.element_kind)
