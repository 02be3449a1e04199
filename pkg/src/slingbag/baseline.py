"""Universal back-projection (UBP) reference reconstruction."""

import numpy as np

from .model import VoxelGrid


def ubp_filter(data, sample_rate, t_start=0.0):
    """``b(t) = 2 p(t) - 2 t dp/dt`` per trace, derivative by central differences."""
    data = np.asarray(data, dtype=np.float64)
    t = t_start + np.arange(data.shape[-1]) / sample_rate
    dpdt = np.gradient(data, 1.0 / sample_rate, axis=-1)
    return 2.0 * data - 2.0 * t * dpdt


def ubp_reconstruct(obs, array, spec, medium, solid_angle=False, chunk=65536):
    """Back-project filtered traces onto the nodes of ``spec``.

    Each node takes the (weighted) mean over sensors of ``b`` at the node's
    time of flight, linearly interpolated; times outside the record add
    nothing. With ``solid_angle`` the weight is ``cos(theta) / d**2`` using
    the sensor normals, otherwise all sensors weigh the same.

    Returns ``(grid, raw)``: ``grid`` is clipped at zero for display, ``raw``
    is the signed volume.
    """
    obs.check_matches(array)
    if solid_angle and array.normals is None:
        raise ValueError("solid-angle weighting needs sensor normals")
    b = ubp_filter(obs.data, obs.sample_rate, obs.t_start)
    n_t = b.shape[1]
    nodes = spec.nodes().reshape(-1, 3)
    raw = np.zeros(len(nodes))
    fs = array.sample_rate
    v = medium.sound_speed

    for start in range(0, len(nodes), chunk):
        pts = nodes[start:start + chunk]
        acc = np.zeros(len(pts))
        wsum = np.zeros(len(pts))
        for m, s in enumerate(array.positions):
            diff = pts - s
            d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            idx = (d / v - array.t_start) * fs
            i0 = np.floor(idx).astype(np.intp)
            ok = (i0 >= 0) & (i0 < n_t - 1)
            frac = idx - i0
            i0c = np.clip(i0, 0, n_t - 2)
            val = np.where(ok, (1.0 - frac) * b[m, i0c] + frac * b[m, i0c + 1], 0.0)
            if solid_angle:
                cos = np.clip(diff @ array.normals[m] / np.maximum(d, 1e-30), 0.0, None)
                w = cos / np.maximum(d, 1e-30) ** 2
            else:
                w = 1.0
            acc += w * val
            wsum += w
        with np.errstate(invalid="ignore", divide="ignore"):
            raw[start:start + chunk] = np.where(wsum > 0, acc / wsum, 0.0)

    raw = raw.reshape(spec.dims)
    grid = VoxelGrid(spec.origin, spec.spacing, np.clip(raw, 0.0, None))
    return grid, raw
