"""In-memory volume types.

Spatial arrays are indexed ``(x, y, z[, t])``. Whenever voxels are
flattened (masking, feature ordering) the scan order is x-fastest, i.e.
NumPy Fortran order, which is also the NIfTI on-disk order.
"""
from dataclasses import dataclass

import numpy as np

from src.errors import AffineMismatch, BadShape, EmptyMask, NonFiniteData, ShapeMismatch, SingularAffine

ELEMENT_KINDS = ("u8", "i16", "i32", "f32", "f64")
AFFINE_ATOL = 1e-6


def check_affine(affine) -> np.ndarray:
    """Validate a 4×4 voxel-to-world matrix and return it as float64."""
    m = np.asarray(affine, dtype=np.float64)
    if m.shape != (4, 4):
        raise SingularAffine(f"affine must be 4x4, got {m.shape}")
    if not np.array_equal(m[3], [0.0, 0.0, 0.0, 1.0]):
        raise SingularAffine(f"affine last row must be (0,0,0,1), got {m[3].tolist()}")
    if not np.all(np.isfinite(m)):
        raise SingularAffine("affine has non-finite entries")
    if abs(np.linalg.det(m[:3, :3])) <= 1e-12:
        raise SingularAffine("affine upper-left 3x3 block is singular")
    return m


def affines_match(a: np.ndarray, b: np.ndarray, atol: float = AFFINE_ATOL) -> bool:
    return bool(np.all(np.abs(np.asarray(a) - np.asarray(b)) <= atol))


def voxel_sizes(affine: np.ndarray) -> np.ndarray:
    """Length of each index step in millimeters."""
    return np.sqrt((np.asarray(affine)[:3, :3] ** 2).sum(axis=0))


@dataclass(frozen=True)
class Volume4D:
    """Voxel grid with a time/trial axis and its affine."""
    data: np.ndarray  # (nx, ny, nz, nt), float64
    affine: np.ndarray
    element_kind: str = "f64"

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 3:
            data = data[..., np.newaxis]
        if data.ndim != 4 or min(data.shape) < 1:
            raise BadShape(f"volume data must be 4D with positive dims, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise NonFiniteData("volume contains NaN or infinite values")
        if self.element_kind not in ELEMENT_KINDS:
            raise ValueError(f"unknown element kind {self.element_kind!r}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "affine", check_affine(self.affine))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return tuple(int(s) for s in self.data.shape)

    @property
    def spatial_shape(self) -> tuple[int, int, int]:
        return self.shape[:3]

    @property
    def n_frames(self) -> int:
        return self.shape[3]

    def frame(self, t: int) -> np.ndarray:
        return self.data[..., t]

    def mean_volume(self) -> "Volume4D":
        """Temporal mean as a single-frame volume."""
        return Volume4D(self.data.mean(axis=3, keepdims=True), self.affine)


@dataclass(frozen=True)
class BrainMask:
    """Boolean 3D grid selecting the voxels that become features."""
    flags: np.ndarray  # (nx, ny, nz) bool
    affine: np.ndarray

    def __post_init__(self):
        flags = np.asarray(self.flags)
        if flags.ndim == 4 and flags.shape[3] == 1:
            flags = flags[..., 0]
        if flags.ndim != 3:
            raise BadShape(f"mask must be 3D, got shape {flags.shape}")
        flags = flags.astype(bool)
        if not flags.any():
            raise EmptyMask("mask selects no voxels")
        flags.setflags(write=False)
        object.__setattr__(self, "flags", flags)
        object.__setattr__(self, "affine", check_affine(self.affine))

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(int(s) for s in self.flags.shape)

    @property
    def n_voxels(self) -> int:
        return int(np.count_nonzero(self.flags))

    @property
    def flat_indices(self) -> np.ndarray:
        """Positions of the selected voxels in x-fastest scan order."""
        return np.flatnonzero(self.flags.ravel(order="F"))

    def voxel_indices(self) -> np.ndarray:
        """(n_voxels, 3) integer indices in feature order."""
        return np.column_stack(np.unravel_index(self.flat_indices, self.shape, order="F"))

    def world_coordinates(self) -> np.ndarray:
        """(n_voxels, 3) millimeter coordinates in feature order."""
        ijk = self.voxel_indices().astype(np.float64)
        return ijk @ self.affine[:3, :3].T + self.affine[:3, 3]

    @classmethod
    def from_volume(cls, vol: Volume4D, frame: int = 0) -> "BrainMask":
        """Nonzero voxels of one frame of a volume (mask files on disk)."""
        return cls(vol.data[..., frame] != 0, vol.affine)

    def to_volume(self) -> Volume4D:
        return Volume4D(self.flags.astype(np.float64)[..., np.newaxis], self.affine, "u8")

    def check_compatible(self, shape: tuple[int, ...], affine: np.ndarray) -> None:
        if len(shape) < 3 or tuple(shape[:3]) != self.shape:
            raise ShapeMismatch(f"mask shape {self.shape} does not match volume shape {tuple(shape)}")
        if not affines_match(self.affine, affine):
            raise AffineMismatch("mask and volume affines differ by more than 1e-6")
