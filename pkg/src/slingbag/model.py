"""Core data types and sensor-array geometry.

All lengths are meters, times are seconds and rates are Hz. Pressures are in
arbitrary linear units.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    check_axis,
    check_count,
    check_points,
    check_positive,
    check_vector3,
)

#: Smallest standard deviation for which the smoothed step is a faithful
#: approximation of the ideal step at the default sharpness.
A0_MIN = 50e-6

#: Gradient column order used by :class:`PointCloud.grads`.
GRAD_FIELDS = ("x", "y", "z", "p0", "a0")


@dataclass(frozen=True)
class Medium:
    """Homogeneous, lossless acoustic medium."""

    sound_speed: float = 1500.0

    def __post_init__(self):
        check_positive(self.sound_speed, "sound_speed")


@dataclass(frozen=True)
class GaussianSource:
    """Isotropic Gaussian initial-pressure blob.

    ``p0`` is the peak pressure, ``a0`` the standard deviation and ``center``
    the mean position.
    """

    p0: float
    a0: float
    center: tuple

    def __post_init__(self):
        check_positive(self.a0, "a0")
        if not np.isfinite(self.p0):
            raise ValueError("p0 must be finite")
        object.__setattr__(self, "center", tuple(check_vector3(self.center, "center")))


@dataclass(eq=False)
class PointCloud:
    """A mutable, array-backed collection of Gaussian sources.

    Parameters are stored column-wise: ``centers`` is (n, 3), ``p0`` and
    ``a0`` are (n,). ``grads`` is (n, 5) in the order of
    :data:`GRAD_FIELDS`. ``state`` holds any further per-source arrays (the
    optimizer keeps its moment buffers there) so that density-control passes
    can carry them along with the sources they belong to.
    """

    centers: np.ndarray
    p0: np.ndarray
    a0: np.ndarray
    grads: np.ndarray = None
    state: dict = field(default_factory=dict)

    def __post_init__(self):
        self.centers = np.array(self.centers, dtype=np.float64).reshape(-1, 3)
        n = len(self.centers)
        self.p0 = np.array(self.p0, dtype=np.float64).reshape(n)
        self.a0 = np.array(self.a0, dtype=np.float64).reshape(n)
        if self.grads is None:
            self.grads = np.zeros((n, 5))
        else:
            self.grads = np.array(self.grads, dtype=np.float64).reshape(n, 5)
        for key, arr in self.state.items():
            if len(arr) != n:
                raise ValueError(f"state array {key!r} has length {len(arr)}, expected {n}")

    @classmethod
    def from_sources(cls, sources):
        sources = list(sources)
        if not sources:
            return cls(np.zeros((0, 3)), np.zeros(0), np.zeros(0))
        return cls(
            centers=[s.center for s in sources],
            p0=[s.p0 for s in sources],
            a0=[s.a0 for s in sources],
        )

    @property
    def sources(self):
        return [
            GaussianSource(float(p), float(a), tuple(c))
            for c, p, a in zip(self.centers, self.p0, self.a0)
        ]

    def __len__(self):
        return len(self.p0)

    def copy(self):
        return PointCloud(
            self.centers.copy(),
            self.p0.copy(),
            self.a0.copy(),
            self.grads.copy(),
            {k: v.copy() for k, v in self.state.items()},
        )

    def take(self, index):
        """Return a new cloud made of rows ``index`` (gradients and state included)."""
        index = np.asarray(index, dtype=np.intp)
        return PointCloud(
            self.centers[index],
            self.p0[index],
            self.a0[index],
            self.grads[index],
            {k: v[index] for k, v in self.state.items()},
        )

    @property
    def params(self):
        """(n, 5) parameter matrix in :data:`GRAD_FIELDS` order."""
        return np.column_stack([self.centers, self.p0, self.a0])


@dataclass(frozen=True, eq=False)
class SensorArray:
    """Point-like ultrasound detectors with a shared sampling clock.

    ``grid_shape``, ``pitch`` and ``normal`` are set by the builders; they
    let :func:`undersample_planar` and the solid-angle weighting of the
    back-projection baseline recover the layout.
    """

    positions: np.ndarray
    sample_rate: float
    num_samples: int
    t_start: float = 0.0
    grid_shape: tuple = None
    pitch: float = None
    normals: np.ndarray = None

    def __post_init__(self):
        pos = check_points(self.positions, "positions")
        if len(pos) == 0:
            raise ValueError("a sensor array needs at least one sensor")
        object.__setattr__(self, "positions", pos)
        check_positive(self.sample_rate, "sample_rate")
        check_count(self.num_samples, "num_samples", minimum=2)
        if not np.isfinite(self.t_start):
            raise ValueError("t_start must be finite")
        if self.grid_shape is not None:
            nx, ny = self.grid_shape
            if nx * ny != len(pos):
                raise ValueError("grid_shape does not match the number of positions")
        if self.normals is not None:
            normals = check_points(self.normals, "normals")
            if normals.shape != pos.shape:
                raise ValueError("normals must have one row per sensor")
            object.__setattr__(self, "normals", normals)

    @property
    def n_sensors(self):
        return len(self.positions)

    @property
    def dt(self):
        return 1.0 / self.sample_rate

    @property
    def times(self):
        return self.t_start + np.arange(self.num_samples) / self.sample_rate

    def with_sampling(self, sample_rate=None, num_samples=None, t_start=None):
        return SensorArray(
            self.positions,
            self.sample_rate if sample_rate is None else sample_rate,
            self.num_samples if num_samples is None else num_samples,
            self.t_start if t_start is None else t_start,
            self.grid_shape,
            self.pitch,
            self.normals,
        )


@dataclass(eq=False)
class SignalSet:
    """Pressure traces, one row per sensor."""

    data: np.ndarray
    sample_rate: float
    t_start: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 2:
            raise ValueError(f"signal data must be 2-D (sensors, samples), got {self.data.shape}")
        check_positive(self.sample_rate, "sample_rate")

    @property
    def shape(self):
        return self.data.shape

    def check_matches(self, array):
        if self.data.shape != (array.n_sensors, array.num_samples):
            raise ValueError(
                f"signal shape {self.data.shape} does not match sensor array "
                f"({array.n_sensors}, {array.num_samples})"
            )
        if not np.isclose(self.sample_rate, array.sample_rate, rtol=1e-12):
            raise ValueError("signal sample_rate differs from the sensor array's")


@dataclass(eq=False)
class VoxelGrid:
    """Scalar volume on an isotropic grid; ``values[i, j, k]`` sits at
    ``origin + spacing * (i, j, k)``."""

    origin: np.ndarray
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        self.origin = check_vector3(self.origin, "origin")
        check_positive(self.spacing, "spacing")
        self.values = np.asarray(self.values)
        if self.values.ndim != 3:
            raise ValueError("voxel values must be a 3-D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("voxel values must be finite")
        if np.any(self.values < 0):
            raise ValueError("voxel values must be non-negative")

    @property
    def dims(self):
        return self.values.shape


# ---------------------------------------------------------------------------
# geometry builders
# ---------------------------------------------------------------------------

def _plane_basis(normal_axis):
    ax = check_axis(normal_axis)
    u, v = [i for i in range(3) if i != ax]
    return ax, u, v


def make_planar_array(nx, ny, pitch, center=(0.0, 0.0, 0.0), normal_axis="z",
                      sample_rate=40e6, num_samples=4096, t_start=0.0):
    """Regular ``nx`` x ``ny`` grid of sensors in the plane normal to
    ``normal_axis``, centered on ``center``.

    Sensors are ordered row-major over (first in-plane axis, second in-plane
    axis), so ``positions.reshape(nx, ny, 3)`` recovers the grid.
    """
    nx = check_count(nx, "nx")
    ny = check_count(ny, "ny")
    pitch = check_positive(pitch, "pitch")
    center = check_vector3(center, "center")
    ax, u, v = _plane_basis(normal_axis)

    offs_u = (np.arange(nx) - (nx - 1) / 2.0) * pitch
    offs_v = (np.arange(ny) - (ny - 1) / 2.0) * pitch
    pos = np.tile(center, (nx * ny, 1))
    gu, gv = np.meshgrid(offs_u, offs_v, indexing="ij")
    pos[:, u] += gu.ravel()
    pos[:, v] += gv.ravel()
    normals = np.zeros_like(pos)
    normals[:, ax] = 1.0
    return SensorArray(pos, sample_rate, num_samples, t_start,
                       grid_shape=(nx, ny), pitch=pitch, normals=normals)


def undersample_planar(array, stride):
    """Keep every ``stride``-th sensor along both grid axes.

    The kept sensors start at grid index 0, so a 350-wide grid with stride 15
    keeps 24 columns. ``stride`` larger than both grid dimensions is rejected.
    """
    if array.grid_shape is None or array.pitch is None:
        raise ValueError("undersample_planar needs an array built by make_planar_array")
    stride = check_count(stride, "stride")
    nx, ny = array.grid_shape
    if stride > 1 and stride >= max(nx, ny):
        raise ValueError(f"stride {stride} is incompatible with grid {nx}x{ny}")
    grid = array.positions.reshape(nx, ny, 3)[::stride, ::stride]
    normals = None
    if array.normals is not None:
        normals = array.normals.reshape(nx, ny, 3)[::stride, ::stride].reshape(-1, 3)
    return SensorArray(
        grid.reshape(-1, 3).copy(),
        array.sample_rate,
        array.num_samples,
        array.t_start,
        grid_shape=grid.shape[:2],
        pitch=array.pitch * stride,
        normals=normals,
    )


_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def make_hemispherical_array(n, radius, center=(0.0, 0.0, 0.0), pole=(0.0, 0.0, -1.0),
                             sample_rate=40e6, num_samples=4096, t_start=0.0):
    """``n`` sensors on the hemisphere around ``pole`` (Fibonacci spiral).

    Heights along the pole axis are evenly spaced, which gives equal-area
    bands on a sphere; the first sensor sits exactly on the pole. Every
    sensor faces ``center``.
    """
    n = check_count(n, "n")
    radius = check_positive(radius, "radius")
    center = check_vector3(center, "center")
    w = check_vector3(pole, "pole")
    norm = np.linalg.norm(w)
    if norm == 0:
        raise ValueError("pole must be a nonzero vector")
    w = w / norm
    helper = np.array([1.0, 0.0, 0.0]) if abs(w[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(w, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(w, e1)

    k = np.arange(n)
    h = 1.0 - k / n
    rho = np.sqrt(np.clip(1.0 - h * h, 0.0, None))
    phi = k * _GOLDEN_ANGLE
    unit = (h[:, None] * w + (rho * np.cos(phi))[:, None] * e1
            + (rho * np.sin(phi))[:, None] * e2)
    # renormalize so every |pos - center| equals radius to rounding
    unit /= np.linalg.norm(unit, axis=1, keepdims=True)
    return SensorArray(center + radius * unit, sample_rate, num_samples, t_start,
                       normals=-unit)
