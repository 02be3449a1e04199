"""Two-stage point-cloud optimization with adaptive density control.

The coarse stage only updates ``p0`` and ``a0`` of randomly placed sources;
the fine stage also moves the sources and duplicates them along their
position gradients. Both stages periodically prune weak or tiny sources and
split oversized ones.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import radiator
from ._validation import check_count, check_nonnegative, check_positive
from .model import A0_MIN, PointCloud, SignalSet

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# a0 never drops below this between density passes; the forward model needs a0 > 0
A0_FLOOR = 1e-7


class ReconstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class StageConfig:
    """Hyper-parameters of one optimization stage.

    Learning rates are Adam step sizes in the parameter's own units (meters
    for positions and ``a0``). Use :meth:`coarse` and :meth:`fine` for the
    stage defaults.
    """

    lr_p0: float
    lr_a0: float
    lr_pos: float = 0.0
    n_iters: int = 1000
    density_interval: int = 100
    destroy_p0_frac: float = 0.01
    destroy_a0_min: float = A0_MIN
    split_a0_max: float = 0.8e-3
    split_enabled: bool = True
    duplicate_enabled: bool = False
    pos_update_enabled: bool = False
    duplicate_halves_p0: bool = True
    convergence_window: int = 50
    convergence_tol: float = 1e-5

    def __post_init__(self):
        for name in ("lr_p0", "lr_a0", "lr_pos", "destroy_p0_frac", "convergence_tol"):
            check_nonnegative(getattr(self, name), name)
        check_positive(self.destroy_a0_min, "destroy_a0_min")
        check_positive(self.split_a0_max, "split_a0_max")
        check_count(self.n_iters, "n_iters", minimum=0)
        check_count(self.density_interval, "density_interval")
        check_count(self.convergence_window, "convergence_window")

    @classmethod
    def coarse(cls, **overrides):
        params = dict(lr_p0=0.05, lr_a0=4e-5, lr_pos=0.0, density_interval=100,
                      split_enabled=False, duplicate_enabled=False,
                      pos_update_enabled=False)
        params.update(overrides)
        return cls(**params)

    @classmethod
    def fine(cls, **overrides):
        params = dict(lr_p0=4e-3, lr_a0=4e-6, lr_pos=4e-6, density_interval=200,
                      split_enabled=True, duplicate_enabled=True,
                      pos_update_enabled=True)
        params.update(overrides)
        return cls(**params)

    def learning_rates(self):
        pos = self.lr_pos if self.pos_update_enabled else 0.0
        return np.array([pos, pos, pos, self.lr_p0, self.lr_a0])


@dataclass(frozen=True)
class InitConfig:
    """Uniform random initialization inside an axis-aligned box."""

    bounds: tuple
    n_points: int = 1000
    p0_range: tuple = (0.0, 0.1)
    a0_range: tuple = (0.1e-3, 0.4e-3)
    rng_seed: int = 0

    def __post_init__(self):
        lo, hi = (np.asarray(b, dtype=np.float64) for b in self.bounds)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
            raise ValueError("bounds must be ((xmin, ymin, zmin), (xmax, ymax, zmax)) with max > min")
        object.__setattr__(self, "bounds", (tuple(lo), tuple(hi)))
        for name in ("p0_range", "a0_range"):
            lo_, hi_ = getattr(self, name)
            if not hi_ >= lo_:
                raise ValueError(f"{name} must be an ordered (low, high) pair")
        if self.a0_range[0] <= 0:
            raise ValueError("a0_range must be positive")


def init_cloud(cfg):
    """Draw ``cfg.n_points`` sources uniformly over bounds x p0_range x a0_range."""
    if cfg.n_points < 1:
        raise ValueError("n_points must be >= 1: an empty cloud cannot be optimized")
    rng = np.random.default_rng(cfg.rng_seed)
    lo, hi = (np.asarray(b) for b in cfg.bounds)
    centers = rng.uniform(lo, hi, size=(cfg.n_points, 3))
    p0 = rng.uniform(*cfg.p0_range, size=cfg.n_points)
    a0 = rng.uniform(*cfg.a0_range, size=cfg.n_points)
    return PointCloud(centers, p0, a0)


def l2_loss(pred, obs):
    """Return ``(||pred - obs||_2, dL/dpred)`` where the residual is a :class:`SignalSet`."""
    a = pred.data if isinstance(pred, SignalSet) else np.asarray(pred)
    b = obs.data if isinstance(obs, SignalSet) else np.asarray(obs)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch between prediction {a.shape} and observation {b.shape}")
    diff = np.asarray(a, dtype=np.float64) - b
    loss = float(np.sqrt(np.sum(diff * diff)))
    resid = diff / loss if loss > 0 else np.zeros_like(diff)
    rate = pred.sample_rate if isinstance(pred, SignalSet) else 1.0
    t0 = pred.t_start if isinstance(pred, SignalSet) else 0.0
    return loss, SignalSet(resid, rate, t0)


class Adam:
    """Adam with per-column learning rates; moments live in ``cloud.state``.

    Keeping the moments in the cloud means destroy/split/duplicate carry
    them along with the sources they belong to (children inherit the
    parent's moments).
    """

    def __init__(self, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    @staticmethod
    def _moments(cloud):
        n = len(cloud)
        for key in ("adam_m", "adam_v"):
            if key not in cloud.state or cloud.state[key].shape != (n, 5):
                cloud.state[key] = np.zeros((n, 5))
        return cloud.state["adam_m"], cloud.state["adam_v"]

    def step(self, cloud, grads, lr):
        lr = np.broadcast_to(np.asarray(lr, dtype=np.float64), (5,))
        m, v = self._moments(cloud)
        self.t += 1
        m *= self.beta1
        m += (1.0 - self.beta1) * grads
        v *= self.beta2
        v += (1.0 - self.beta2) * grads * grads
        m_hat = m / (1.0 - self.beta1 ** self.t)
        v_hat = v / (1.0 - self.beta2 ** self.t)
        update = lr * m_hat / (np.sqrt(v_hat) + self.eps)
        if lr[0] != 0.0 or lr[1] != 0.0 or lr[2] != 0.0:
            cloud.centers -= update[:, :3]
        cloud.p0 -= update[:, 3]
        cloud.a0 -= update[:, 4]
        return cloud


def step(cloud, grads, stage, optimizer=None):
    """Apply one Adam update using the stage's learning rates.

    ``a0`` is kept positive; in a stage without splitting it is also capped
    at ``split_a0_max`` so no source outgrows what the stage can handle.
    """
    optimizer = optimizer or Adam()
    grads = np.asarray(grads, dtype=np.float64)
    optimizer.step(cloud, grads, stage.learning_rates())
    hi = np.inf if stage.split_enabled else stage.split_a0_max
    np.clip(cloud.a0, A0_FLOOR, hi, out=cloud.a0)
    return cloud


def destroy(cloud, stage):
    """Drop sources with ``p0 <= 0``, ``p0 < frac * max(p0)`` or ``a0 < a0_min``.

    If nothing would survive, the strongest source is kept (clamped to
    ``p0 >= 0`` and ``a0 >= a0_min``) and a warning is logged.
    """
    if len(cloud) == 0:
        raise ValueError("cannot prune an empty cloud")
    pmax = cloud.p0.max()
    keep = (cloud.p0 > 0) & (cloud.a0 >= stage.destroy_a0_min)
    if pmax > 0:
        keep &= cloud.p0 >= stage.destroy_p0_frac * pmax
    if keep.any():
        return cloud.take(np.flatnonzero(keep))
    best = int(np.argmax(cloud.p0))
    logger.warning("destroy pass would empty the cloud; keeping source %d (p0=%.3g)",
                   best, cloud.p0[best])
    out = cloud.take([best])
    out.p0[:] = max(out.p0[0], 0.0)
    out.a0[:] = max(out.a0[0], stage.destroy_a0_min)
    return out


def _unit_position_gradients(grads):
    g = grads[:, :3]
    norm = np.linalg.norm(g, axis=1)
    unit = np.zeros_like(g)
    nz = norm > 0
    unit[nz] = g[nz] / norm[nz, None]
    return unit, nz


def split(cloud, stage):
    """Replace every source with ``a0 > split_a0_max`` by two half-size children.

    Children keep ``p0`` and sit at ``center +/- (a0 / 2) * g`` where ``g`` is
    the unit position gradient (``+x`` when that gradient vanishes).
    """
    big = cloud.a0 > stage.split_a0_max
    if not big.any():
        return cloud
    unit, nz = _unit_position_gradients(cloud.grads)
    unit[~nz] = (1.0, 0.0, 0.0)
    keep = np.flatnonzero(~big)
    parents = np.flatnonzero(big)
    out = cloud.take(np.concatenate([keep, parents, parents]))
    k, s = len(keep), len(parents)
    offset = (cloud.a0[parents] / 2.0)[:, None] * unit[parents]
    out.centers[k:k + s] += offset
    out.centers[k + s:] -= offset
    out.a0[k:] = np.tile(cloud.a0[parents] / 2.0, 2)
    return out


def duplicate(cloud, stage):
    """Copy every source with a nonzero position gradient one half-sigma
    down that gradient.

    With ``stage.duplicate_halves_p0`` both the original and the copy get
    half the original ``p0``.
    """
    unit, nz = _unit_position_gradients(cloud.grads)
    parents = np.flatnonzero(nz)
    if len(parents) == 0:
        return cloud
    out = cloud.take(np.concatenate([np.arange(len(cloud)), parents]))
    n = len(cloud)
    out.centers[n:] -= (cloud.a0[parents] / 2.0)[:, None] * unit[parents]
    if stage.duplicate_halves_p0:
        out.p0[parents] *= 0.5
        out.p0[n:] *= 0.5
    return out


def density_control(cloud, stage):
    if stage.duplicate_enabled:
        cloud = duplicate(cloud, stage)
    if stage.split_enabled:
        cloud = split(cloud, stage)
    return destroy(cloud, stage)


def _emit(sink, it, loss, n):
    if sink is None:
        return
    line = f"{it},{loss:.17g},{n}"
    if callable(sink):
        sink(line)
    else:
        sink.write(line + "\n")


def run_stage(cloud, obs, array, medium, stage, rad_cfg=None, sink=None, start_iter=0,
              history=None):
    """Run one stage in place-style and return ``(cloud, next_iteration)``."""
    rad_cfg = rad_cfg or radiator.RadiatorConfig()
    opt = Adam()
    losses = []
    it = start_iter
    for i in range(stage.n_iters):
        pred = radiator.forward(cloud, array, medium, rad_cfg)
        loss, resid = l2_loss(pred, obs)
        if not math.isfinite(loss):
            raise ReconstructionError(f"loss became non-finite at iteration {it}")
        _emit(sink, it, loss, len(cloud))
        if history is not None:
            history.append((it, loss, len(cloud)))
        losses.append(loss)
        radiator.backward(cloud, array, medium, rad_cfg, resid)
        step(cloud, cloud.grads, stage, opt)
        it += 1
        last = i == stage.n_iters - 1
        if (i + 1) % stage.density_interval == 0 and not last:
            cloud = density_control(cloud, stage)
            # restructuring makes the loss jump; judge convergence afresh
            losses.clear()
            continue
        w = stage.convergence_window
        if len(losses) > w:
            before = min(losses[:-w])
            gain = (before - min(losses[-w:])) / before if before > 0 else 0.0
            if gain < stage.convergence_tol:
                logger.info("stage converged at iteration %d (best-loss gain %.3g over %d iters)",
                            it - 1, gain, w)
                break
    return cloud, it


def reconstruct(obs, array, medium, init, coarse=None, fine=None, rad_cfg=None,
                sink=None, history=None, cloud=None):
    """Coarse stage, then fine stage; returns the optimized :class:`PointCloud`.

    ``sink`` receives one ``iter,loss,n_points`` CSV line per iteration (a
    file-like object or a callable). ``history``, if given, is a list that
    collects the same records as tuples. A starting ``cloud`` overrides
    ``init``.
    """
    coarse = coarse or StageConfig.coarse()
    fine = fine or StageConfig.fine()
    obs.check_matches(array)
    if cloud is None:
        cloud = init_cloud(init)
    else:
        cloud = cloud.copy()
    if len(cloud) == 0:
        raise ValueError("cannot reconstruct from an empty cloud")
    cloud.state.clear()
    cloud, it = run_stage(cloud, obs, array, medium, coarse, rad_cfg, sink, 0, history)
    cloud = destroy(cloud, coarse)
    cloud.state.clear()
    cloud, it = run_stage(cloud, obs, array, medium, fine, rad_cfg, sink, it, history)
    cloud = destroy(cloud, fine)
    cloud.state.clear()
    return cloud

