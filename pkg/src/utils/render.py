"""Slice rendering to binary PGM (P5) images."""
from pathlib import Path
from typing import Optional

import numpy as np

from src.errors import BadShape, BadSlice, IoFailure, ShapeMismatch
from src.imaging.volume import Volume4D

OVERLAY_FLOOR = 128


def _slice(vol: Volume4D, axis: int, index: int) -> np.ndarray:
    """2D image of frame 0: rows run from +y (top) to -y, columns along the first remaining axis."""
    if axis not in (0, 1, 2):
        raise BadSlice(f"axis must be 0, 1 or 2, got {axis}")
    size = vol.spatial_shape[axis]
    if not 0 <= index < size:
        raise BadSlice(f"slice {index} outside 0..{size - 1} along axis {axis}")
    plane = np.take(vol.data[..., 0], index, axis=axis)
    return plane.T[::-1]


def _to_byte(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def render_array(map_vol: Volume4D, background: Optional[Volume4D], axis: int, index: int) -> np.ndarray:
    """uint8 image: min-max scaled background, nonzero map voxels burned in on a 128..255 ramp.

    PGM has a single gray channel, so the "hot" overlay is the upper half of
    the gray scale: the weakest nonzero voxel starts at mid-gray and the
    largest |value| is white. Sign is dropped.
    """
    overlay = _slice(map_vol, axis, index)
    image = np.zeros(overlay.shape)
    if background is not None:
        if background.spatial_shape != map_vol.spatial_shape:
            raise ShapeMismatch(f"background {background.spatial_shape} vs map {map_vol.spatial_shape}")
        base = _slice(background, axis, index)
        lo, hi = base.min(), base.max()
        if hi > lo:
            image = 255.0 * (base - lo) / (hi - lo)

    magnitude = np.abs(overlay)
    peak = magnitude.max()
    if peak > 0:
        hot = magnitude > 0
        image[hot] = OVERLAY_FLOOR + (255 - OVERLAY_FLOOR) * magnitude[hot] / peak
    return _to_byte(image)


def label_palette(n_labels: int, seed: int = 0) -> np.ndarray:
    """Gray level per label: 0 stays black, labels 1.. get a seeded shuffle of 1..255.

    Up to 255 labels get pairwise distinct levels; beyond that the shuffle repeats.
    """
    levels = np.random.default_rng(seed).permutation(np.arange(1, 256))
    palette = np.zeros(n_labels + 1, dtype=np.uint8)
    palette[1:] = levels[np.arange(n_labels) % levels.size]
    return palette


def render_labels(label_vol: Volume4D, axis: int, index: int, seed: int = 0) -> np.ndarray:
    """uint8 image of an integer label volume (0 = background) through a seeded random palette."""
    labels = np.rint(_slice(label_vol, axis, index)).astype(np.int64)
    if labels.min() < 0:
        raise BadShape(f"labels must be >= 0, got {labels.min()}")
    n_labels = int(np.rint(label_vol.data.max()))
    return label_palette(n_labels, seed)[labels]


def _write_pgm(pixels: np.ndarray, out: Path) -> Path:
    height, width = pixels.shape
    out = Path(out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write {out}: {e}") from e
    return out


def render_slice(map_vol: Volume4D, background: Optional[Volume4D], axis: int, index: int, out: Path) -> Path:
    return _write_pgm(render_array(map_vol, background, axis, index), out)


def render_label_slice(label_vol: Volume4D, axis: int, index: int, out: Path, seed: int = 0) -> Path:
    return _write_pgm(render_labels(label_vol, axis, index, seed), out)
