"""Spatial resampling of volumes onto a new voxel grid."""
import logging
from typing import Literal

import numpy as np
from scipy import ndimage

from src.errors import BadShape, ConfigError, SingularAffine
from src.imaging.volume import Volume4D, check_affine

logger = logging.getLogger(__name__)

Interpolation = Literal["nearest", "trilinear"]
INTERP_ORDER = {"nearest": 0, "trilinear": 1}

# Source coordinates this close to an integer are snapped onto it, so that
# identity transforms reproduce the input exactly.
SNAP_TOL = 1e-9


def source_coordinates(source_affine: np.ndarray, target_affine: np.ndarray,
                       target_shape: tuple[int, int, int]) -> np.ndarray:
    """(3, n_targets) source-grid coordinates of every target voxel, x-fastest."""
    try:
        inv = np.linalg.inv(source_affine)
    except np.linalg.LinAlgError as e:
        raise SingularAffine("source affine is not invertible") from e
    grid = np.indices(target_shape, dtype=np.float64).reshape(3, -1, order="F")
    homogeneous = np.vstack([grid, np.ones((1, grid.shape[1]))])
    coords = (inv @ target_affine @ homogeneous)[:3]
    rounded = np.round(coords)
    snap = np.abs(coords - rounded) <= SNAP_TOL
    coords[snap] = rounded[snap]
    return coords


def resample(vol: Volume4D, target_affine, target_shape: tuple[int, int, int],
             interp: Interpolation = "trilinear") -> Volume4D:
    """Sample every frame of ``vol`` on the grid given by target_affine/target_shape.

    Target voxel i takes the source value at inv(source_affine) @ target_affine @ i.
    Points outside the source grid are 0.
    """
    target_affine = check_affine(target_affine)
    target_shape = tuple(int(s) for s in target_shape)
    if len(target_shape) != 3 or min(target_shape) < 1:
        raise BadShape(f"target shape must be 3 positive ints, got {target_shape}")
    if interp not in INTERP_ORDER:
        raise ConfigError(f"interp must be one of {list(INTERP_ORDER)}, got {interp!r}")

    coords = source_coordinates(vol.affine, target_affine, target_shape)
    order = INTERP_ORDER[interp]
    out = np.empty((*target_shape, vol.n_frames))
    for t in range(vol.n_frames):
        sampled = ndimage.map_coordinates(vol.frame(t), coords, order=order, mode="constant", cval=0.0)
        out[..., t] = sampled.reshape(target_shape, order="F")

    logger.debug(f"Resampled {vol.shape} -> {out.shape} ({interp})")
    return Volume4D(out, target_affine, vol.element_kind)
