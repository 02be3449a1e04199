"""Independent reference computations shared by the unit and acceptance tests."""

import numpy as np

from slingbag import radiator
from slingbag.model import PointCloud, SensorArray


def objective(cloud, array, medium, cfg, weights):
    return float(np.sum(weights * radiator.forward(cloud, array, medium, cfg).data))


def fd_gradients(cloud, array, medium, cfg, weights, h_pos=1e-9, h_rel_p0=1e-6):
    """Central differences of ``sum(weights * forward)`` for every source parameter."""
    out = np.zeros((len(cloud), 5))
    for k in range(len(cloud)):
        for j in range(5):
            h = h_rel_p0 * abs(cloud.p0[k]) if j == 3 else h_pos
            vals = []
            for sgn in (1.0, -1.0):
                c = cloud.copy()
                if j < 3:
                    c.centers[k, j] += sgn * h
                elif j == 3:
                    c.p0[k] += sgn * h
                else:
                    c.a0[k] += sgn * h
                vals.append(objective(c, array, medium, cfg, weights))
            out[k, j] = (vals[0] - vals[1]) / (2 * h)
    return out


def _mp_erf(x):
    import mpmath as mp

    # erfc(9) < 1e-36, far below the working precision used here
    return mp.erf(x) if abs(x) < 9 else mp.sign(x)


def mp_objective(center, p0, a0, array, medium, cfg, weights):
    """``sum(weights * forward)`` for one source, evaluated in 40-digit arithmetic."""
    import mpmath as mp

    with mp.workdps(40):
        eps = mp.mpf(cfg.epsilon)
        v = mp.mpf(medium.sound_speed)
        total = mp.mpf(0)
        for s, pos in enumerate(array.positions):
            r = mp.sqrt(sum((mp.mpf(pos[i]) - center[i]) ** 2 for i in range(3)))
            for j in range(array.num_samples):
                t = mp.mpf(array.t_start) + mp.mpf(j) / mp.mpf(array.sample_rate)
                d = r - v * t
                acc = mp.mpf(0)
                for ratio, w in zip(cfg.radii_array, cfg.weights_array):
                    ai = mp.mpf(ratio) * a0
                    acc += mp.mpf(w) * (_mp_erf(eps * (d + ai)) - _mp_erf(eps * (d - ai)))
                total += mp.mpf(weights[s, j]) * p0 * d / (4 * r) * acc
        return total


def mp_fd_gradients(cloud, array, medium, cfg, weights, h_pos=1e-11, h_rel_p0=1e-6):
    """Central differences like :func:`fd_gradients`, taken of :func:`mp_objective`.

    Float64 differences cannot resolve a partial that is many orders below
    its siblings (the forward sum itself is only accurate to ~1e-16 relative).
    Without roundoff the step can shrink until truncation error is negligible.
    """
    import mpmath as mp

    out = np.zeros((len(cloud), 5))
    with mp.workdps(40):
        for k in range(len(cloud)):
            base = [mp.mpf(x) for x in cloud.params[k]]
            for j in range(5):
                h = mp.mpf(h_rel_p0 * abs(cloud.p0[k]) if j == 3 else h_pos)
                vals = []
                for sgn in (1, -1):
                    p = list(base)
                    p[j] += sgn * h
                    vals.append(mp_objective(p[:3], p[3], p[4], array, medium, cfg, weights))
                out[k, j] = float((vals[0] - vals[1]) / (2 * h))
    return out


def tol_ratio(analytic, numeric, rtol=1e-4, atol=1e-12):
    """``|a - n| / max(rtol |n|, atol)``; below 1 means within tolerance."""
    return np.abs(analytic - numeric) / np.maximum(rtol * np.abs(numeric), atol)


def rel_err(analytic, numeric, floor=1e-12):
    return np.abs(analytic - numeric) / np.maximum(np.abs(numeric), floor)


def window_array(sensor, center, a0, medium, sample_rate=40e6, pad=20):
    """One sensor whose record just covers the pulse from ``center``."""
    r = np.linalg.norm(np.asarray(sensor) - center)
    span = 3 * a0 + 6e-6
    t0 = (r - span) / medium.sound_speed
    n = int(np.ceil(2 * span / medium.sound_speed * sample_rate)) + pad
    return SensorArray([sensor], sample_rate, n, t_start=t0 - pad / 2 / sample_rate)


def uniform_sphere_trace(p0, a, center, array, medium):
    """Hard-edged N-pulse of a uniform sphere: ``p0 D / (2R)`` for ``|D| < a``."""
    r = np.linalg.norm(array.positions - np.asarray(center), axis=1)[:, None]
    d = r - medium.sound_speed * array.times[None, :]
    return np.where(np.abs(d) < a, p0 * d / (2 * r), 0.0), d


def staircase_voxels(center, p0, a0, nodes, cfg=None):
    """Brute-force staircase intensity at each node (loops over shells)."""
    cfg = cfg or radiator.RadiatorConfig()
    d = nodes - np.asarray(center)
    r = np.sqrt(d[..., 0] ** 2 + d[..., 1] ** 2 + d[..., 2] ** 2)
    out = np.zeros(r.shape)
    # outermost shell first, matching the staircase definition
    for ratio, w in zip(cfg.radii_array[::-1], cfg.weights_array[::-1]):
        out = np.where(r <= ratio * a0, out + w * p0, out)
    return out


def fine_gaussian_config(n_shells=100, epsilon=1e6):
    """Staircase of a unit-peak Gaussian (sigma = 1) cut at 3 sigma with ``n_shells`` steps.

    Shell k spans ``((k-1) dr, k dr]`` with ``dr = 3 / n_shells`` and carries
    the Gaussian value at its midpoint, so the superposed profile is the
    midpoint staircase of ``exp(-r^2 / 2)``.
    """
    edges = 3.0 * np.arange(1, n_shells + 1) / n_shells
    mids = edges - 1.5 / n_shells
    level = np.exp(-0.5 * mids ** 2)
    weights = level - np.append(level[1:], 0.0)
    return radiator.RadiatorConfig(epsilon, tuple(edges), tuple(weights))


def single(center, p0, a0):
    return PointCloud([center], [p0], [a0])


def brute_forward(cloud, array, medium, cfg=None):
    """Direct evaluation of the shell sum with scipy's erf, no culling."""
    from scipy.special import erf

    cfg = cfg or radiator.RadiatorConfig()
    eps = cfg.epsilon
    out = np.zeros((array.n_sensors, array.num_samples))
    t = array.times[None, :]
    for c, p, a in zip(cloud.centers, cloud.p0, cloud.a0):
        r = np.linalg.norm(array.positions - c, axis=1)[:, None]
        d = r - medium.sound_speed * t
        for ratio, w in zip(cfg.radii_array, cfg.weights_array):
            ai = ratio * a
            box = 0.5 * (erf(eps * (d + ai)) - erf(eps * (d - ai)))
            out += w * p * d / (2 * r) * box
    return out
