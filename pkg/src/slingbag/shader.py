"""Point cloud to voxel grid conversion, plus MAP and slice extraction."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_axis, check_count, check_positive, check_vector3
from .model import VoxelGrid
from .radiator import RadiatorConfig


@dataclass(frozen=True)
class GridSpec:
    origin: tuple
    spacing: float
    dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(check_vector3(self.origin, "origin")))
        check_positive(self.spacing, "spacing")
        if len(self.dims) != 3:
            raise ValueError("dims must have three entries")
        object.__setattr__(self, "dims", tuple(check_count(d, "dims") for d in self.dims))

    @classmethod
    def covering(cls, lo, hi, spacing):
        """Smallest grid with nodes on ``lo`` that reaches ``hi``."""
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        dims = np.floor((hi - lo) / spacing + 1e-9).astype(int) + 1
        return cls(tuple(lo), spacing, tuple(int(d) for d in dims))

    def axis_coords(self, axis):
        return self.origin[axis] + self.spacing * np.arange(self.dims[axis])

    def nodes(self):
        """All node coordinates, shape ``dims + (3,)``."""
        return np.stack(np.meshgrid(*(self.axis_coords(i) for i in range(3)),
                                    indexing="ij"), axis=-1)


@dataclass
class VoxelizeStats:
    n_sources: int = 0
    n_painted: int = 0
    n_outside: int = 0


def voxelize(cloud, spec, cfg=None, return_stats=False):
    """Paint every source's staircase profile onto the grid nodes.

    A node at distance ``r`` from a source center receives the sum of the
    shell pressures whose radius is at least ``r``; contributions of all
    sources add up. Sources whose support misses the grid are skipped and
    counted in the stats. Negative totals (only possible for ``p0 < 0``)
    are clipped to zero.
    """
    cfg = cfg or RadiatorConfig()
    radii = cfg.radii_array
    weights = cfg.weights_array
    h = spec.spacing
    origin = np.asarray(spec.origin)
    dims = np.asarray(spec.dims)
    values = np.zeros(spec.dims)
    stats = VoxelizeStats(n_sources=len(cloud))

    for c, p, a in zip(cloud.centers, cloud.p0, cloud.a0):
        support = radii[-1] * a
        lo = np.maximum(np.ceil((c - support - origin) / h - 1e-9).astype(int), 0)
        hi = np.minimum(np.floor((c + support - origin) / h + 1e-9).astype(int), dims - 1)
        if np.any(hi < lo):
            stats.n_outside += 1
            continue
        axes = [origin[i] + h * np.arange(lo[i], hi[i] + 1) - c[i] for i in range(3)]
        r = np.sqrt(axes[0][:, None, None] ** 2 + axes[1][None, :, None] ** 2
                    + axes[2][None, None, :] ** 2)
        # index of the innermost shell that still contains r
        shell = np.searchsorted(radii * a, r, side="left")
        inside = shell < len(radii)
        # staircase value inside shell i: pressures of shells i..10, summed outermost first
        tail = np.cumsum((weights * p)[::-1])[::-1]
        block = np.where(inside, tail[np.minimum(shell, len(radii) - 1)], 0.0)
        values[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1] += block
        stats.n_painted += 1

    np.clip(values, 0.0, None, out=values)
    grid = VoxelGrid(origin, h, values)
    if return_stats:
        return grid, stats
    return grid


def map_projection(grid, axis="z"):
    """Maximum amplitude projection along ``axis``."""
    values = grid.values if isinstance(grid, VoxelGrid) else np.asarray(grid)
    return values.max(axis=check_axis(axis))


def slice(grid, axis, index):  # noqa: A001 - mirrors the public operation name
    """The plane ``index`` along ``axis`` (values unmodified)."""
    values = grid.values if isinstance(grid, VoxelGrid) else np.asarray(grid)
    ax = check_axis(axis)
    n = values.shape[ax]
    if isinstance(index, bool) or not isinstance(index, (int, np.integer)) or not 0 <= index < n:
        raise ValueError(f"slice index {index!r} out of range for axis of length {n}")
    return np.take(values, int(index), axis=ax)
