"""NIfTI-1 reading and writing for 3D scalar volumes.

Only the single-file NIfTI-1 flavor is supported (.nii, optionally gzipped).
NIfTI-2 and .hdr/.img pairs are rejected. All voxel data is promoted to
float64 on load; files are always written as float32 with identity scaling.
The affine is carried as opaque metadata (no resampling is ever performed).
"""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    IoFailure,
    MalformedHeader,
    NonFiniteVoxel,
    UnsupportedDatatype,
)

HEADER_SIZE = 348
MAGIC = b"n+1\x00"
GZIP_MAGIC = b"\x1f\x8b"

# NIfTI-1 datatype code -> (numpy dtype, source_dtype label)
_DTYPES = {
    2: (np.uint8, "U8"),
    4: (np.int16, "I16"),
    8: (np.int32, "I32"),
    16: (np.float32, "F32"),
    64: (np.float64, "F64"),
}


@dataclass
class Volume:
    """A 3D scalar field with voxel spacing and a pass-through affine.

    ``data`` is float64, shape (nx, ny, nz), x-fastest on disk.
    """

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    affine: np.ndarray = field(default_factory=lambda: np.eye(4))
    source_dtype: str = "F32"

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.data.shape)

    def with_data(self, data: np.ndarray) -> "Volume":
        """New Volume sharing this volume's geometry."""
        if data.shape != self.data.shape:
            raise DimensionMismatch(
                f"replacement data shape {data.shape} != {self.data.shape}")
        return Volume(np.asarray(data, dtype=np.float64),
                      self.spacing, self.affine, self.source_dtype)

    def validate(self) -> None:
        if self.data.ndim != 3:
            raise DimensionMismatch(f"expected 3D data, got {self.data.ndim}D")
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteVoxel("volume contains NaN/Inf voxels")
        if any(s <= 0 for s in self.spacing):
            raise MalformedHeader(f"non-positive spacing {self.spacing}")


@dataclass
class Mask:
    """Binary ROI congruent with a Volume. ``data`` holds exactly 0/1."""

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    affine: np.ndarray = field(default_factory=lambda: np.eye(4))
    binarized: bool = False  # True when the file held non-{0,1} values

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.data.shape)

    @property
    def bool(self) -> np.ndarray:
        return self.data.astype(np.bool_)


def _read_bytes(path) -> bytes:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if raw[:2] == GZIP_MAGIC:
        try:
            raw = gzip.decompress(raw)
        except OSError as e:
            raise IoFailure(f"corrupt gzip container in {path}: {e}") from e
    return raw


def _parse_header(raw: bytes, path):
    if len(raw) < HEADER_SIZE:
        raise MalformedHeader(f"{path}: file shorter than the 348-byte header")
    endian = "<"
    (sizeof_hdr,) = struct.unpack_from("<i", raw, 0)
    if sizeof_hdr != HEADER_SIZE:
        endian = ">"
        (sizeof_hdr,) = struct.unpack_from(">i", raw, 0)
        if sizeof_hdr != HEADER_SIZE:
            raise MalformedHeader(f"{path}: sizeof_hdr != 348 in either byte order")
    if raw[344:348] != MAGIC:
        raise MalformedHeader(f"{path}: magic is not 'n+1\\0' (single-file NIfTI-1 only)")

    dim = struct.unpack_from(endian + "8h", raw, 40)
    (datatype,) = struct.unpack_from(endian + "h", raw, 70)
    pixdim = struct.unpack_from(endian + "8f", raw, 76)
    (vox_offset,) = struct.unpack_from(endian + "f", raw, 108)
    scl_slope, scl_inter = struct.unpack_from(endian + "2f", raw, 112)
    qform_code, sform_code = struct.unpack_from(endian + "2h", raw, 252)
    quatern = struct.unpack_from(endian + "3f", raw, 256)
    qoffset = struct.unpack_from(endian + "3f", raw, 268)
    srow = np.array(struct.unpack_from(endian + "12f", raw, 280),
                    dtype=np.float64).reshape(3, 4)

    ndim = dim[0]
    if ndim < 3 or (ndim > 3 and any(d > 1 for d in dim[4:ndim + 1])):
        raise DimensionMismatch(
            f"{path}: dim[0]={ndim} with non-singleton trailing dims is unsupported")
    nx, ny, nz = dim[1], dim[2], dim[3]
    if min(nx, ny, nz) <= 0:
        raise MalformedHeader(f"{path}: non-positive dims {(nx, ny, nz)}")
    if datatype not in _DTYPES:
        raise UnsupportedDatatype(f"{path}: NIfTI datatype code {datatype}")

    spacing = tuple(float(abs(p)) for p in pixdim[1:4])
    if any(s <= 0 for s in spacing):
        raise MalformedHeader(f"{path}: non-positive pixdim {spacing}")

    if sform_code > 0:
        affine = np.eye(4)
        affine[:3, :] = srow
    elif qform_code > 0:
        affine = _qform_affine(quatern, qoffset, pixdim)
    else:
        affine = np.diag([*spacing, 1.0])

    return {
        "endian": endian,
        "dims": (nx, ny, nz),
        "datatype": datatype,
        "spacing": spacing,
        "vox_offset": int(round(vox_offset)) if vox_offset else HEADER_SIZE + 4,
        "scl_slope": scl_slope,
        "scl_inter": scl_inter,
        "affine": affine,
    }


def _qform_affine(quatern, qoffset, pixdim) -> np.ndarray:
    # Standard NIfTI-1 quaternion-to-rotation reconstruction.
    b, c, d = (float(q) for q in quatern)
    a2 = 1.0 - (b * b + c * c + d * d)
    a = np.sqrt(a2) if a2 > 0 else 0.0
    qfac = -1.0 if pixdim[0] < 0 else 1.0
    r = np.array([
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
    ])
    sx, sy, sz = abs(pixdim[1]), abs(pixdim[2]), abs(pixdim[3])
    affine = np.eye(4)
    affine[:3, :3] = r @ np.diag([sx, sy, sz * qfac])
    affine[:3, 3] = qoffset
    return affine


def read_volume(path) -> Volume:
    """Load a NIfTI-1 volume, applying scl_slope/scl_inter, as float64."""
    raw = _read_bytes(path)
    hdr = _parse_header(raw, path)
    nx, ny, nz = hdr["dims"]
    np_dtype, label = _DTYPES[hdr["datatype"]]
    count = nx * ny * nz
    dt = np.dtype(np_dtype).newbyteorder(hdr["endian"])
    payload = raw[hdr["vox_offset"]:hdr["vox_offset"] + count * dt.itemsize]
    if len(payload) < count * dt.itemsize:
        raise MalformedHeader(f"{path}: voxel payload truncated")
    data = np.frombuffer(payload, dtype=dt, count=count)
    data = data.reshape((nx, ny, nz), order="F").astype(np.float64)

    slope = float(hdr["scl_slope"])
    inter = float(hdr["scl_inter"])
    if slope == 0.0 or not np.isfinite(slope):
        slope = 1.0
    if not np.isfinite(inter):
        inter = 0.0
    if slope != 1.0 or inter != 0.0:
        data = data * slope + inter

    if not np.all(np.isfinite(data)):
        raise NonFiniteVoxel(f"{path}: non-finite voxel values after scaling")

    return Volume(data=data, spacing=hdr["spacing"], affine=hdr["affine"],
                  source_dtype=label)


def read_mask(path) -> Mask:
    """Load a volume and binarize it with threshold > 0.5."""
    v = read_volume(path)
    exact = np.all((v.data == 0.0) | (v.data == 1.0))
    data = (v.data > 0.5).astype(np.uint8)
    return Mask(data=data, spacing=v.spacing, affine=v.affine,
                binarized=not bool(exact))


def check_congruent(v: Volume, m: Mask) -> None:
    if v.dims != m.dims:
        raise DimensionMismatch(f"volume dims {v.dims} != mask dims {m.dims}")


def _build_header(v: Volume) -> bytes:
    hdr = bytearray(HEADER_SIZE)
    struct.pack_into("<i", hdr, 0, HEADER_SIZE)
    nx, ny, nz = v.dims
    struct.pack_into("<8h", hdr, 40, 3, nx, ny, nz, 1, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, 16)          # datatype: float32
    struct.pack_into("<h", hdr, 72, 32)          # bitpix
    sx, sy, sz = v.spacing
    struct.pack_into("<8f", hdr, 76, 1.0, sx, sy, sz, 0, 0, 0, 0)
    struct.pack_into("<f", hdr, 108, float(HEADER_SIZE + 4))  # vox_offset
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)  # scl_slope, scl_inter
    struct.pack_into("<2h", hdr, 252, 0, 1)      # qform_code=0, sform_code=1
    srow = np.asarray(v.affine, dtype=np.float64)[:3, :].astype(np.float32)
    struct.pack_into("<12f", hdr, 280, *srow.ravel())
    hdr[344:348] = MAGIC
    return bytes(hdr)


def write_volume(v: Volume, path, compress: bool | None = None) -> None:
    """Write a float32 single-file NIfTI-1; gzip when ``compress`` (or .gz path)."""
    path = Path(path)
    if compress is None:
        compress = path.suffix == ".gz"
    payload = np.asarray(v.data, dtype="<f4").ravel(order="F").tobytes()
    blob = _build_header(v) + b"\x00" * 4 + payload
    try:
        if compress:
            # mtime/filename pinned so identical volumes produce identical bytes
            with open(path, "wb") as f:
                with gzip.GzipFile(filename="", fileobj=f, mode="wb", mtime=0) as gz:
                    gz.write(blob)
        else:
            path.write_bytes(blob)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def write_mask(m: Mask, path, compress: bool | None = None) -> None:
    v = Volume(data=m.data.astype(np.float64), spacing=m.spacing,
               affine=m.affine)
    write_volume(v, path, compress=compress)
