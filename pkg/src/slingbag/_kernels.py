"""Numba kernels for the analytic radiator.

Partitioning contract: the forward kernel parallelizes over sensors and the
backward kernel over sources. Every output slot is written by exactly one
iteration of the parallel loop, which accumulates in a fixed order (sources
then shells for the forward pass, sensors then samples for the backward
pass), so results do not depend on the number of threads.
"""

import math
import os

import numba
import numpy as np
from numba import njit, prange

# the bundled TBB is often too old and only produces a warning; try it last
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

# |eps * x| beyond which the smoothed step is 0 or 1 and the smoothed delta
# is below 1e-15 of its peak, in float64.
_SAT = 6.0
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)


def configure_threads():
    """Apply ``SLINGBAG_THREADS`` (capped by numba's pool size)."""
    value = os.environ.get("SLINGBAG_THREADS")
    if not value:
        return numba.get_num_threads()
    n = max(1, min(int(value), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


@njit(cache=True, inline="always")
def _ustep(x):
    # x is already scaled by eps
    if x >= _SAT:
        return 1.0
    if x <= -_SAT:
        return 0.0
    return 0.5 * math.erfc(-x)


@njit(cache=True, inline="always")
def _delta(x, eps):
    # x is already scaled by eps
    if x >= _SAT or x <= -_SAT:
        return 0.0
    return eps * _INV_SQRT_PI * math.exp(-x * x)


@njit(cache=True, inline="always")
def _window(r, half, v, t0, dt, n_t):
    lo = math.ceil(((r - half) / v - t0) / dt)
    hi = math.floor(((r + half) / v - t0) / dt)
    if lo < 0:
        lo = 0
    if hi > n_t - 1:
        hi = n_t - 1
    return lo, hi


@njit(cache=True)
def support_violation(centers, a0, sensors, ratio_max):
    """First (source, sensor) pair with the sensor inside the source support."""
    for n in range(centers.shape[0]):
        lim = ratio_max * a0[n]
        for m in range(sensors.shape[0]):
            dx = sensors[m, 0] - centers[n, 0]
            dy = sensors[m, 1] - centers[n, 1]
            dz = sensors[m, 2] - centers[n, 2]
            if math.sqrt(dx * dx + dy * dy + dz * dz) <= lim:
                return n, m
    return -1, -1


@njit(cache=True, inline="always")
def _shell_terms(d, a, eps, ratios, weights, tail):
    """Return (sum w_i box_i, sum w_i r_i (delta+ + delta-), sum w_i (delta+ - delta-)).

    Shells whose edges are more than the saturation distance away from
    ``|d|`` are resolved without evaluating erf/exp: radii are ascending, so
    once a shell fully contains ``d`` all outer ones do too.
    """
    ad = abs(d)
    band = _SAT / eps
    box = 0.0
    dsum = 0.0
    ddiff = 0.0
    for i in range(ratios.shape[0]):
        ai = ratios[i] * a
        if ai <= ad - band:
            continue
        if ai >= ad + band:
            box += tail[i]
            break
        xp = eps * (d + ai)
        xm = eps * (d - ai)
        w = weights[i]
        box += w * (_ustep(xp) - _ustep(xm))
        dp = _delta(xp, eps)
        dm = _delta(xm, eps)
        dsum += w * ratios[i] * (dp + dm)
        ddiff += w * (dp - dm)
    return box, dsum, ddiff


@njit(cache=True, inline="always")
def _shell_box(d, a, eps, ratios, weights, tail):
    ad = abs(d)
    band = _SAT / eps
    box = 0.0
    for i in range(ratios.shape[0]):
        ai = ratios[i] * a
        if ai <= ad - band:
            continue
        if ai >= ad + band:
            box += tail[i]
            break
        box += weights[i] * (_ustep(eps * (d + ai)) - _ustep(eps * (d - ai)))
    return box


def tail_sums(weights):
    """``tail[i] = sum(weights[i:])``, accumulated outermost first."""
    return np.cumsum(weights[::-1])[::-1].copy()


@njit(parallel=True, cache=True)
def forward_kernel(centers, p0, a0, sensors, t0, dt, n_t, v, eps, cut,
                   ratios, weights, tail, out):
    n_src = centers.shape[0]
    rmax = ratios[ratios.shape[0] - 1]
    for m in prange(sensors.shape[0]):
        sx = sensors[m, 0]
        sy = sensors[m, 1]
        sz = sensors[m, 2]
        for n in range(n_src):
            amp = p0[n]
            if amp == 0.0:
                continue
            dx = sx - centers[n, 0]
            dy = sy - centers[n, 1]
            dz = sz - centers[n, 2]
            r = math.sqrt(dx * dx + dy * dy + dz * dz)
            a = a0[n]
            lo, hi = _window(r, rmax * a + cut, v, t0, dt, n_t)
            inv2r = 0.5 / r
            for k in range(lo, hi + 1):
                d = r - v * (t0 + k * dt)
                out[m, k] += amp * d * inv2r * _shell_box(d, a, eps, ratios, weights, tail)


@njit(parallel=True, cache=True)
def backward_kernel(centers, p0, a0, sensors, t0, dt, n_t, v, eps, cut,
                    ratios, weights, tail, resid, grads):
    n_sens = sensors.shape[0]
    rmax = ratios[ratios.shape[0] - 1]
    for n in prange(centers.shape[0]):
        cx = centers[n, 0]
        cy = centers[n, 1]
        cz = centers[n, 2]
        a = a0[n]
        amp = p0[n]
        gx = 0.0
        gy = 0.0
        gz = 0.0
        gp = 0.0
        ga = 0.0
        for m in range(n_sens):
            dx = sensors[m, 0] - cx
            dy = sensors[m, 1] - cy
            dz = sensors[m, 2] - cz
            r = math.sqrt(dx * dx + dy * dy + dz * dz)
            lo, hi = _window(r, rmax * a + cut, v, t0, dt, n_t)
            inv2r = 0.5 / r
            gr = 0.0
            for k in range(lo, hi + 1):
                res = resid[m, k]
                if res == 0.0:
                    continue
                vt = v * (t0 + k * dt)
                d = r - vt
                box, dsum, ddiff = _shell_terms(d, a, eps, ratios, weights, tail)
                shape = d * inv2r
                gp += res * shape * box
                ga += res * amp * shape * dsum
                gr += res * amp * (vt * inv2r / r * box + shape * ddiff)
            # dR/dx_s = -(x_r - x_s) / R
            gx -= gr * dx / r
            gy -= gr * dy / r
            gz -= gr * dz / r
        grads[n, 0] = gx
        grads[n, 1] = gy
        grads[n, 2] = gz
        grads[n, 3] = gp
        grads[n, 4] = ga
