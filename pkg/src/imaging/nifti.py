"""
NIfTI-1 reader and writer for the subset this toolkit handles.

Supported on read: single-file ("n+1") and header/image pairs ("ni1"),
either byte order, datatypes u8/i16/i32/f32/f64, up to 4 dimensions.
Header fields are decoded through nibabel's Nifti1Header; the payload is
read directly so the subset checks stay explicit.
Writes are always little-endian single-file f64.
"""
import logging
from pathlib import Path

import nibabel as nib
import numpy as np

from src.errors import BadMagic, BadShape, IoFailure, TruncatedFile, UnsupportedDatatype, UnsupportedLayout
from src.imaging.volume import Volume4D, voxel_sizes

logger = logging.getLogger(__name__)

HEADER_SIZE = 348
SINGLE_FILE_OFFSET = 352
MAX_DIM = 32767

# datatype code -> (numpy type code, element kind)
DATATYPES = {
    2: ("u1", "u8"),
    4: ("i2", "i16"),
    8: ("i4", "i32"),
    16: ("f4", "f32"),
    64: ("f8", "f64"),
}


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e


def _detect_endianness(raw: bytes) -> str:
    """dim[0] must be 1..7; if it is not under little-endian, the file is big-endian."""
    dim0 = int(np.frombuffer(raw, dtype="<i2", count=1, offset=40)[0])
    return "<" if 1 <= dim0 <= 7 else ">"


def _decode_header(raw: bytes) -> nib.Nifti1Header:
    if len(raw) < HEADER_SIZE:
        raise TruncatedFile(f"file has {len(raw)} bytes, header needs {HEADER_SIZE}")
    endian = _detect_endianness(raw)
    hdr = nib.Nifti1Header(raw[:HEADER_SIZE], endianness=endian, check=False)
    if int(hdr["sizeof_hdr"]) != HEADER_SIZE:
        raise BadMagic(f"sizeof_hdr is {int(hdr['sizeof_hdr'])}, expected {HEADER_SIZE}")
    return hdr


def _shape_from_header(hdr: nib.Nifti1Header) -> tuple[int, int, int, int]:
    dim = [int(d) for d in hdr["dim"]]
    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise UnsupportedLayout(f"dim[0] = {ndim} is outside 1..7")
    sizes = dim[1:1 + ndim]
    if any(s < 1 for s in sizes):
        raise UnsupportedLayout(f"non-positive dimension in {sizes}")
    if any(s != 1 for s in sizes[4:]):
        raise UnsupportedLayout(f"dimensions beyond the 4th must be 1, got {sizes}")
    sizes = (sizes + [1, 1, 1, 1])[:4]
    return tuple(sizes)


def _affine_from_header(hdr: nib.Nifti1Header) -> np.ndarray:
    if int(hdr["sform_code"]) > 0:
        affine = np.eye(4)
        affine[0] = hdr["srow_x"]
        affine[1] = hdr["srow_y"]
        affine[2] = hdr["srow_z"]
        return affine
    pixdim = np.asarray(hdr["pixdim"][1:4], dtype=np.float64)
    # zero pixdims are common in hand-made headers
    pixdim = np.where(pixdim > 0, pixdim, 1.0)
    return np.diag([*pixdim, 1.0])


def read_nifti(path: str | Path) -> Volume4D:
    """Load a NIfTI-1 volume into memory as float64."""
    path = Path(path)
    raw = _read_bytes(path)
    hdr = _decode_header(raw)

    magic = hdr["magic"].item()
    if magic == b"n+1":
        payload = raw
        offset = int(hdr["vox_offset"])
        if len(raw) < SINGLE_FILE_OFFSET:
            raise TruncatedFile(f"single-file NIfTI must have at least {SINGLE_FILE_OFFSET} bytes")
    elif magic == b"ni1":
        payload = _read_bytes(path.with_suffix(".img"))
        offset = int(hdr["vox_offset"])
    else:
        raise BadMagic(f"unrecognized magic {magic!r}")

    code = int(hdr["datatype"])
    if code not in DATATYPES:
        raise UnsupportedDatatype(f"datatype {code} is not one of {sorted(DATATYPES)}")
    type_code, element_kind = DATATYPES[code]
    dtype = np.dtype(hdr.endianness + type_code)

    shape = _shape_from_header(hdr)
    count = int(np.prod(shape))
    needed = offset + count * dtype.itemsize
    if len(payload) < needed:
        raise TruncatedFile(f"{path.name}: payload needs {needed} bytes, file has {len(payload)}")

    values = np.frombuffer(payload, dtype=dtype, count=count, offset=offset)
    data = values.reshape(shape, order="F").astype(np.float64)

    slope = float(hdr["scl_slope"])
    if np.isfinite(slope) and slope != 0.0:
        inter = float(hdr["scl_inter"])
        data = data * slope + (inter if np.isfinite(inter) else 0.0)

    logger.debug(f"Read {path.name}: shape={shape}, datatype={element_kind}, endian={hdr.endianness}")
    return Volume4D(data, _affine_from_header(hdr), element_kind)


def write_nifti(vol: Volume4D, path: str | Path) -> None:
    """Write a little-endian single-file f64 NIfTI-1."""
    path = Path(path)
    if max(vol.shape) > MAX_DIM:
        raise BadShape(f"shape {vol.shape} does not fit 16-bit NIfTI dims")

    hdr = nib.Nifti1Header(endianness="<")
    hdr.set_data_shape(vol.shape)
    hdr.set_data_dtype(np.float64)
    hdr.set_sform(vol.affine, code=1)
    hdr.set_zooms((*voxel_sizes(vol.affine), 1.0))
    hdr["vox_offset"] = SINGLE_FILE_OFFSET
    hdr["scl_slope"] = 1.0
    hdr["scl_inter"] = 0.0

    blob = hdr.binaryblock + b"\x00" * (SINGLE_FILE_OFFSET - HEADER_SIZE)
    blob += vol.data.astype("<f8").tobytes(order="F")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(blob)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
    logger.debug(f"Wrote {path} ({len(blob)} bytes)")
