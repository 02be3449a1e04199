"""Differentiable analytic radiator.

A Gaussian source is replaced by ten concentric uniform spheres whose radii
and pressures are fixed fractions of ``a0`` and ``p0``. A uniform sphere
radiates the closed-form N-shaped pulse

    p(R, t) = p0 * D / (2R) * (u(D + a) - u(D - a)),   D = R - v t,

and the ideal step ``u`` is replaced by ``0.5 * (1 + erf(eps * x))`` so the
whole model is differentiable in the source center, ``p0`` and ``a0``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from . import _kernels
from ._validation import check_positive
from .model import GaussianSource, SignalSet

#: Shell radii as multiples of a0 (innermost first).
SHELL_RADII = np.array([0.5, 0.6, 0.9, 1.2, 1.5, 1.8, 2.1, 2.4, 2.7, 3.0])
#: Shell pressures as fractions of p0; they sum to one.
SHELL_WEIGHTS = np.arange(10, 0, -1) / 55.0

#: Support culling margin in units of 1/eps.
CULL_MARGIN = 5.0


class SupportViolationError(ValueError):
    """A sensor lies inside the spherical support of a source."""

    def __init__(self, source, sensor, distance, support):
        self.source = source
        self.sensor = sensor
        super().__init__(
            f"sensor {sensor} is inside the support of source {source} "
            f"(distance {distance:.6g} m <= {support:.6g} m)"
        )


@dataclass(frozen=True)
class RadiatorConfig:
    """``epsilon`` is the smoothed-step sharpness in 1/m.

    ``radii`` and ``weights`` default to the ten-shell scheme; any other
    scheme (for example one uniform sphere, ``radii=(1,), weights=(1,)``)
    may be supplied for testing.
    """

    epsilon: float = 1e6
    radii: tuple = field(default=tuple(SHELL_RADII))
    weights: tuple = field(default=tuple(SHELL_WEIGHTS))

    def __post_init__(self):
        check_positive(self.epsilon, "epsilon")
        radii = np.asarray(self.radii, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if radii.ndim != 1 or radii.shape != weights.shape or len(radii) == 0:
            raise ValueError("radii and weights must be 1-D sequences of equal nonzero length")
        if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
            raise ValueError("shell radii must be positive and strictly increasing")

    @property
    def radii_array(self):
        return np.asarray(self.radii, dtype=np.float64)

    @property
    def weights_array(self):
        return np.asarray(self.weights, dtype=np.float64)

    @property
    def support_ratio(self):
        return float(self.radii[-1])


@dataclass(frozen=True)
class DiscretizedSource:
    center: tuple
    radii: np.ndarray
    pressures: np.ndarray

    def profile(self, r):
        """Superposed initial pressure at distance(s) ``r`` from the center.

        A point at distance ``r`` lies inside every shell whose radius is at
        least ``r``, so the profile is a descending staircase.
        """
        r = np.asarray(r, dtype=np.float64)
        inside = self.radii[None, :] >= r.reshape(-1, 1)
        return (inside @ self.pressures).reshape(r.shape)


def smooth_step(x, epsilon=1e6):
    """``0.5 * (1 + erf(epsilon * x))``."""
    check_positive(epsilon, "epsilon")
    return 0.5 * (1.0 + erf(epsilon * np.asarray(x, dtype=np.float64)))


def smooth_delta(x, epsilon=1e6):
    """Derivative of :func:`smooth_step`: ``epsilon / sqrt(pi) * exp(-(epsilon x)^2)``."""
    check_positive(epsilon, "epsilon")
    x = np.asarray(x, dtype=np.float64)
    return epsilon / np.sqrt(np.pi) * np.exp(-(epsilon * x) ** 2)


def discretize(source, cfg=None):
    """Split a :class:`GaussianSource` into concentric uniform spheres."""
    cfg = cfg or RadiatorConfig()
    if not isinstance(source, GaussianSource):
        raise TypeError("discretize expects a GaussianSource")
    return DiscretizedSource(
        center=source.center,
        radii=cfg.radii_array * source.a0,
        pressures=cfg.weights_array * source.p0,
    )


def _check_support(cloud, array, cfg):
    if len(cloud) == 0:
        return
    n, m = _kernels.support_violation(cloud.centers, cloud.a0, array.positions,
                                      cfg.support_ratio)
    if n >= 0:
        dist = float(np.linalg.norm(array.positions[m] - cloud.centers[n]))
        raise SupportViolationError(int(n), int(m), dist, cfg.support_ratio * cloud.a0[n])


def _kernel_args(cloud, array, medium, cfg):
    return (
        np.ascontiguousarray(cloud.centers),
        np.ascontiguousarray(cloud.p0),
        np.ascontiguousarray(cloud.a0),
        np.ascontiguousarray(array.positions),
        float(array.t_start),
        float(array.dt),
        int(array.num_samples),
        float(medium.sound_speed),
        float(cfg.epsilon),
        CULL_MARGIN / cfg.epsilon,
        cfg.radii_array,
        cfg.weights_array,
        _kernels.tail_sums(cfg.weights_array),
    )


def forward(cloud, array, medium, cfg=None):
    """Simulate the traces recorded by ``array`` for every source in ``cloud``.

    Raises
    ------
    SupportViolationError
        If any sensor lies within ``3 * a0`` of a source center.
    """
    cfg = cfg or RadiatorConfig()
    if np.any(cloud.a0 <= 0):
        raise ValueError("all a0 must be positive")
    _check_support(cloud, array, cfg)
    _kernels.configure_threads()
    out = np.zeros((array.n_sensors, array.num_samples))
    if len(cloud):
        _kernels.forward_kernel(*_kernel_args(cloud, array, medium, cfg), out)
    return SignalSet(out, array.sample_rate, array.t_start)


def backward(cloud, array, medium, cfg=None, residual=None):
    """Accumulate ``dL/dparam`` into ``cloud.grads`` given ``residual = dL/dp``.

    Gradient columns are ``(x, y, z, p0, a0)``. Returns ``cloud.grads``.
    """
    cfg = cfg or RadiatorConfig()
    if residual is None:
        raise ValueError("backward needs a residual signal")
    res = residual.data if isinstance(residual, SignalSet) else np.asarray(residual)
    if res.shape != (array.n_sensors, array.num_samples):
        raise ValueError(
            f"residual shape {res.shape} does not match sensor array "
            f"({array.n_sensors}, {array.num_samples})"
        )
    _kernels.configure_threads()
    grads = np.zeros((len(cloud), 5))
    if len(cloud):
        _kernels.backward_kernel(*_kernel_args(cloud, array, medium, cfg),
                                 np.ascontiguousarray(res, dtype=np.float64), grads)
    cloud.grads = grads
    return grads

