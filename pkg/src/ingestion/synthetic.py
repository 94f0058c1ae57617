"""
Seeded synthetic datasets with known ground truth.

- make_decoding: two-condition block of volumes with an informative ellipsoid
- make_encoding: binary 10x10 stimuli driving voxels through small receptive patches
- make_rest: multi-subject resting-state data built from smooth spatial networks

Every generator is a pure function of its parameters and seed.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from src.errors import BadShape
from src.imaging.masking import unmask
from src.imaging.volume import BrainMask, Volume4D

logger = logging.getLogger(__name__)

VOXEL_SIZE_MM = 2.0
HEAD_BASELINE = 100.0
STIMULUS_SIDE = 10
PATCH_SIDE = 2
AR_COEF = 0.5
MAX_NETWORKS = 8
MAX_MAP_CORR = 0.3


def default_affine(shape: Sequence[int]) -> np.ndarray:
    """Isotropic 2 mm grid centered on the world origin."""
    affine = np.diag([VOXEL_SIZE_MM] * 3 + [1.0])
    affine[:3, 3] = -VOXEL_SIZE_MM * (np.asarray(shape[:3], dtype=np.float64) - 1) / 2
    return affine


def _ellipsoid(shape, center, radii) -> np.ndarray:
    grid = np.indices(shape, dtype=np.float64)
    dist = sum(((grid[a] - center[a]) / radii[a]) ** 2 for a in range(3))
    return dist <= 1.0


def _check_shape(shape) -> tuple[int, int, int]:
    shape = tuple(int(s) for s in shape)
    if len(shape) != 3 or min(shape) < 8:
        raise BadShape(f"shape must be three sizes >= 8, got {shape}")
    return shape


# =============================================================================
# DECODING
# =============================================================================

@dataclass
class DecodingSet:
    volume: Volume4D
    labels: np.ndarray  # (n_trials,), 0/1 interleaved
    truth_support: np.ndarray  # (nx, ny, nz) bool
    head: BrainMask
    snr: float

    @property
    def truth_mask(self) -> BrainMask:
        return BrainMask(self.truth_support, self.volume.affine)


def make_decoding(shape=(12, 12, 12), n_per_class: int = 40, snr: float = 5.0, seed: int = 0) -> DecodingSet:
    """Noisy head volumes; trials of class 1 add ``snr`` inside a seeded ellipsoid."""
    shape = _check_shape(shape)
    if n_per_class < 10:
        raise BadShape(f"n_per_class must be >= 10, got {n_per_class}")
    rng = np.random.default_rng(seed)
    dims = np.asarray(shape, dtype=np.float64)

    head = _ellipsoid(shape, (dims - 1) / 2, 0.45 * dims)
    center = (dims - 1) / 2 + rng.uniform(-0.15, 0.15, size=3) * dims
    truth = _ellipsoid(shape, center, rng.uniform(1.2, 2.0, size=3)) & head
    truth[tuple(np.clip(np.round(center).astype(int), 0, dims.astype(int) - 1))] = True
    truth &= head

    n_trials = 2 * n_per_class
    labels = np.tile([0, 1], n_per_class)
    data = rng.standard_normal((*shape, n_trials))
    data += HEAD_BASELINE
    data[..., labels == 1] += snr * truth[..., np.newaxis]
    data *= head[..., np.newaxis]

    affine = default_affine(shape)
    logger.debug(f"make_decoding: shape={shape}, {int(truth.sum())} informative voxels, snr={snr}")
    return DecodingSet(Volume4D(data, affine), labels, truth, BrainMask(head, affine), float(snr))


# =============================================================================
# ENCODING
# =============================================================================

@dataclass
class EncodingSet:
    stimuli: np.ndarray  # (n_trials, 100) binary
    bold: np.ndarray  # (n_trials, n_voxels)
    true_fields: np.ndarray  # (n_voxels, 100)
    noise_sigma: float
    afferent: np.ndarray  # (n_voxels,) bool

    @property
    def n_voxels(self) -> int:
        return self.bold.shape[1]

    @property
    def mask(self) -> BrainMask:
        """Voxels laid out along x of a (n_voxels, 1, 1) grid."""
        return BrainMask(np.ones((self.n_voxels, 1, 1), dtype=bool), np.diag([VOXEL_SIZE_MM] * 3 + [1.0]))

    @property
    def volume(self) -> Volume4D:
        return unmask(self.bold, self.mask)


def retinotopic_positions(n: int) -> List[tuple[int, int]]:
    """Top-left corners of n patches walked along a snake over the stimulus grid."""
    side = STIMULUS_SIDE - PATCH_SIDE + 1
    snake = [(r, c if r % 2 == 0 else side - 1 - c) for r in range(side) for c in range(side)]
    return [snake[(i * len(snake)) // n] for i in range(n)]


def make_encoding(n_trials: int = 200, n_voxels: int = 100, noise_sigma: float = 0.5, seed: int = 0,
                  afferent_fraction: float = 0.8) -> EncodingSet:
    """Random binary images and linear voxel responses to 2x2 receptive patches.

    Images come in complementary pairs (trial 2p+1 = 1 - trial 2p), so every
    pixel is on in exactly half the trials of any pair-aligned split.
    Voxels with consecutive indices get neighboring patches.
    """
    if n_trials < 50 or n_trials % 2:
        raise BadShape(f"n_trials must be even and >= 50, got {n_trials}")
    if n_voxels < 1:
        raise BadShape(f"n_voxels must be >= 1, got {n_voxels}")
    rng = np.random.default_rng(seed)
    n_pixels = STIMULUS_SIDE * STIMULUS_SIDE

    halves = rng.integers(0, 2, size=(n_trials // 2, n_pixels))
    stimuli = np.empty((n_trials, n_pixels), dtype=np.int64)
    stimuli[0::2] = halves
    stimuli[1::2] = 1 - halves

    n_afferent = max(1, int(round(afferent_fraction * n_voxels)))
    afferent = np.zeros(n_voxels, dtype=bool)
    afferent[np.sort(rng.permutation(n_voxels)[:n_afferent])] = True
    fields = np.zeros((n_voxels, STIMULUS_SIDE, STIMULUS_SIDE))
    for v, (r, c) in zip(np.flatnonzero(afferent), retinotopic_positions(n_afferent)):
        fields[v, r:r + PATCH_SIDE, c:c + PATCH_SIDE] = rng.uniform(0.5, 1.5, size=(PATCH_SIDE, PATCH_SIDE))
    fields = fields.reshape(n_voxels, n_pixels)

    bold = stimuli @ fields.T + noise_sigma * rng.standard_normal((n_trials, n_voxels))
    logger.debug(f"make_encoding: {n_trials} trials, {n_afferent}/{n_voxels} afferent voxels")
    return EncodingSet(stimuli, bold, fields, float(noise_sigma), afferent)


# =============================================================================
# RESTING STATE
# =============================================================================

@dataclass
class RestSet:
    subjects: List[np.ndarray]  # each (nt, n_voxels)
    true_maps: np.ndarray  # (n_networks, n_voxels)
    timecourses: List[np.ndarray] = field(default_factory=list)  # each (nt, n_networks)
    mask: BrainMask = None

    def subject_volume(self, s: int) -> Volume4D:
        return unmask(self.subjects[s], self.mask)


def _blob_maps(shape, n_networks: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian blobs whose pairwise map correlations stay below MAX_MAP_CORR."""
    dims = np.asarray(shape, dtype=np.float64)
    sigma = 0.12 * dims.min()
    grid = np.indices(shape, dtype=np.float64).reshape(3, -1, order="F")
    maps: List[np.ndarray] = []
    for _ in range(1000):
        if len(maps) == n_networks:
            break
        center = rng.uniform(0.2, 0.8, size=3) * (dims - 1)
        blob = np.exp(-((grid - center[:, np.newaxis]) ** 2).sum(axis=0) / (2 * sigma ** 2))
        if all(abs(np.corrcoef(blob, m)[0, 1]) <= MAX_MAP_CORR for m in maps):
            maps.append(blob)
    if len(maps) < n_networks:
        raise BadShape(f"cannot place {n_networks} separated networks in a {shape} grid")
    return np.array(maps)


def make_rest(n_subjects: int = 2, nt: int = 100, shape=(10, 10, 10), n_networks: int = 3, seed: int = 0,
              noise_sigma: float = 0.2) -> RestSet:
    """Shared spatial networks with independent AR(1) time courses per subject plus linear drifts."""
    shape = _check_shape(shape)
    if not 1 <= n_networks <= MAX_NETWORKS:
        raise BadShape(f"n_networks must be in 1..{MAX_NETWORKS}, got {n_networks}")
    if n_subjects < 1 or nt < 3:
        raise BadShape(f"need at least one subject and 3 timepoints, got {n_subjects}, {nt}")
    rng = np.random.default_rng(seed)
    maps = _blob_maps(shape, n_networks, rng)
    n_voxels = maps.shape[1]
    ramp = np.arange(nt) / nt

    subjects, timecourses = [], []
    for _ in range(n_subjects):
        innovations = rng.standard_normal((nt, n_networks))
        tc = np.empty_like(innovations)
        tc[0] = innovations[0]
        for t in range(1, nt):
            tc[t] = AR_COEF * tc[t - 1] + innovations[t]
        drift = np.outer(ramp, rng.standard_normal(n_voxels))
        data = tc @ maps + drift + noise_sigma * rng.standard_normal((nt, n_voxels))
        subjects.append(data)
        timecourses.append(tc)

    mask = BrainMask(np.ones(shape, dtype=bool), default_affine(shape))
    logger.debug(f"make_rest: {n_subjects} subjects x {nt} frames, {n_networks} networks")
    return RestSet(subjects, maps, timecourses, mask)
