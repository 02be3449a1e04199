"""Synthetic source phantoms (stand-ins for vessel-like scenes)."""

import numpy as np

from .model import PointCloud

DEFAULT_BOUNDS = ((-5e-3, -5e-3, 15e-3), (5e-3, 5e-3, 25e-3))


def _points(rng, n=20, bounds=DEFAULT_BOUNDS, p0_range=(0.5, 1.0),
            a0_range=(0.15e-3, 0.3e-3), margin=None):
    if n < 1:
        raise ValueError("a points phantom needs n >= 1")
    lo, hi = (np.asarray(b, dtype=np.float64) for b in bounds)
    if margin is None:
        # keep every source's three-sigma support inside the box
        margin = 3.0 * a0_range[1]
    centers = rng.uniform(lo + margin, hi - margin, size=(n, 3))
    p0 = rng.uniform(*p0_range, size=n)
    a0 = rng.uniform(*a0_range, size=n)
    return PointCloud(centers, p0, a0)


def _along(points, ds):
    """Points every ``ds`` along the polyline ``points`` (endpoints included)."""
    out = []
    for p, q in zip(points[:-1], points[1:]):
        length = np.linalg.norm(q - p)
        n = int(np.floor(length / ds + 1e-9))
        steps = np.arange(n + 1) * ds
        out.append(p + np.outer(steps / length, q - p))
    return np.concatenate(out)


def _tubes(rng, segments=None, n_segments=3, bounds=DEFAULT_BOUNDS, ds=0.5e-3,
           p0=1.0, a0=0.2e-3):
    if segments is None:
        lo, hi = (np.asarray(b, dtype=np.float64) for b in bounds)
        m = 3.0 * a0
        segments = [rng.uniform(lo + m, hi - m, size=(2, 3)) for _ in range(n_segments)]
    centers = np.concatenate([_along(np.asarray(s, dtype=np.float64), ds) for s in segments])
    n = len(centers)
    return PointCloud(centers, np.full(n, p0), np.full(n, a0))


def _helix(rng, center=(0.0, 0.0, 20e-3), radius=3e-3, pitch=2e-3, turns=2.0,
           ds=0.4e-3, p0=1.0, a0=0.2e-3):
    c = np.asarray(center, dtype=np.float64)
    arc_per_rad = np.hypot(radius, pitch / (2 * np.pi))
    total = turns * 2 * np.pi * arc_per_rad
    theta = np.arange(int(np.floor(total / ds + 1e-9)) + 1) * ds / arc_per_rad
    z = pitch * theta / (2 * np.pi) - pitch * turns / 2
    centers = c + np.column_stack([radius * np.cos(theta), radius * np.sin(theta), z])
    n = len(centers)
    return PointCloud(centers, np.full(n, p0), np.full(n, a0))


_KINDS = {"points": _points, "tubes": _tubes, "helix": _helix}


def make_phantom(kind, params=None, seed=0):
    """Build a ``points``, ``tubes`` or ``helix`` phantom.

    ``params`` are keyword arguments of the chosen generator; every random
    draw comes from ``numpy.random.default_rng(seed)``.
    """
    try:
        gen = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown phantom kind {kind!r}; expected one of {sorted(_KINDS)}")
    return gen(np.random.default_rng(seed), **(params or {}))
