"""Binary file formats and image writers.

Every binary file is ``magic (8 bytes) | version (u32) | header | payload``,
all little-endian, with a float32 payload in row-major order:

========== ======================================================  ==================
format     header                                                  payload
========== ======================================================  ==================
SignalSet  n_sensors u32, n_samples u32, sample_rate f64,         n_sensors x n_samples
           t_start f64
PointCloud n_points u32                                            n_points x (x, y, z, p0, a0)
VoxelGrid  origin 3 x f64, spacing f64, dims 3 x u32               dims[0] x dims[1] x dims[2]
========== ======================================================  ==================
"""

import re
import struct
from pathlib import Path

import numpy as np

from .model import PointCloud, SignalSet, VoxelGrid

VERSION = 1
SIGNAL_MAGIC = b"SLBGSIG\x00"
CLOUD_MAGIC = b"SLBGPCL\x00"
GRID_MAGIC = b"SLBGVOX\x00"

_SIGNAL_HEADER = struct.Struct("<IIdd")
_CLOUD_HEADER = struct.Struct("<I")
_GRID_HEADER = struct.Struct("<4d3I")
_VERSION = struct.Struct("<I")
_PAYLOAD = np.dtype("<f4")


class FormatError(ValueError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


def _pack(magic, header, payload):
    payload = np.ascontiguousarray(payload, dtype=_PAYLOAD)
    return magic + _VERSION.pack(VERSION) + header + payload.tobytes()


def _unpack(buf, magic, header_struct, what):
    if len(buf) < 8:
        raise FormatError(f"truncated {what} file: missing magic", len(buf))
    if buf[:8] != magic:
        raise FormatError(f"not a {what} file: bad magic {buf[:8]!r}", 0)
    if len(buf) < 12:
        raise FormatError(f"truncated {what} file: missing version", len(buf))
    (version,) = _VERSION.unpack_from(buf, 8)
    if version != VERSION:
        raise FormatError(f"unsupported {what} version {version}", 8)
    end = 12 + header_struct.size
    if len(buf) < end:
        raise FormatError(f"truncated {what} header", len(buf))
    return header_struct.unpack_from(buf, 12), end


def _payload(buf, offset, count, what):
    need = offset + count * _PAYLOAD.itemsize
    if len(buf) < need:
        # report where the first missing float would start
        got = (len(buf) - offset) // _PAYLOAD.itemsize
        raise FormatError(f"truncated {what} payload: {got} of {count} values",
                          offset + got * _PAYLOAD.itemsize)
    if len(buf) > need:
        raise FormatError(f"trailing bytes after {what} payload", need)
    return np.frombuffer(buf, dtype=_PAYLOAD, count=count, offset=offset).astype(np.float32)


def signals_to_bytes(signals):
    n, m = signals.data.shape
    header = _SIGNAL_HEADER.pack(n, m, float(signals.sample_rate), float(signals.t_start))
    return _pack(SIGNAL_MAGIC, header, signals.data)


def signals_from_bytes(buf):
    (n, m, rate, t0), off = _unpack(buf, SIGNAL_MAGIC, _SIGNAL_HEADER, "signal")
    data = _payload(buf, off, n * m, "signal").reshape(n, m)
    return SignalSet(data, rate, t0)


def cloud_to_bytes(cloud):
    header = _CLOUD_HEADER.pack(len(cloud))
    return _pack(CLOUD_MAGIC, header, cloud.params)


def cloud_from_bytes(buf):
    (n,), off = _unpack(buf, CLOUD_MAGIC, _CLOUD_HEADER, "point cloud")
    rows = _payload(buf, off, n * 5, "point cloud").reshape(n, 5)
    return PointCloud(rows[:, :3], rows[:, 3], rows[:, 4])


def grid_to_bytes(grid):
    header = _GRID_HEADER.pack(*(float(x) for x in grid.origin), float(grid.spacing),
                               *(int(d) for d in grid.dims))
    return _pack(GRID_MAGIC, header, grid.values)


def grid_from_bytes(buf):
    fields, off = _unpack(buf, GRID_MAGIC, _GRID_HEADER, "voxel grid")
    origin, spacing, dims = fields[:3], fields[3], fields[4:]
    values = _payload(buf, off, int(np.prod(dims)), "voxel grid").reshape(dims)
    return VoxelGrid(origin, spacing, values)


def _writer(to_bytes):
    def write(path, obj):
        Path(path).write_bytes(to_bytes(obj))
    return write


def _reader(from_bytes):
    def read(path):
        return from_bytes(Path(path).read_bytes())
    return read


write_signals = _writer(signals_to_bytes)
read_signals = _reader(signals_from_bytes)
write_cloud = _writer(cloud_to_bytes)
read_cloud = _reader(cloud_from_bytes)
write_grid = _writer(grid_to_bytes)
read_grid = _reader(grid_from_bytes)


def write_pgm(path, image, vmax=None):
    """16-bit binary PGM, scaled so ``vmax`` (default: image max) maps to 65535."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("PGM images must be 2-D")
    vmax = img.max() if vmax is None else vmax
    scaled = np.zeros(img.shape) if vmax <= 0 else np.clip(img / vmax, 0.0, 1.0) * 65535.0
    pix = np.rint(scaled).astype(">u2")
    rows, cols = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm(path):
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise FormatError("not a binary PGM file", 0)
    cols, rows, maxval = (int(g) for g in m.groups())
    dtype = ">u2" if maxval > 255 else "u1"
    pix = np.frombuffer(data, dtype=dtype, count=rows * cols, offset=m.end())
    return pix.reshape(rows, cols)


def write_image_csv(path, image):
    np.savetxt(path, np.asarray(image, dtype=np.float64), delimiter=",", fmt="%.17g")


def read_image_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)
