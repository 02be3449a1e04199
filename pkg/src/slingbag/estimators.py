"""scikit-learn style wrappers around the reconstruction routines.

``fit`` consumes recorded traces (a :class:`SignalSet` or a
``(n_sensors, n_samples)`` array); ``predict`` returns the reconstructed
:class:`VoxelGrid`.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import baseline, optimizer, radiator, shader
from .model import Medium, SignalSet


def check_signals(X, array):
    """Coerce ``X`` to a :class:`SignalSet` matching ``array``."""
    if not isinstance(X, SignalSet):
        data = np.asarray(X, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"expected a 2-D (sensors, samples) array, got shape {data.shape}")
        X = SignalSet(data, array.sample_rate, array.t_start)
    if not np.all(np.isfinite(X.data)):
        raise ValueError("signals contain NaN or infinity")
    X.check_matches(array)
    return X


class SlingBAG(BaseEstimator):
    """Point-cloud iterative reconstruction.

    Parameters
    ----------
    array : SensorArray
        Detector geometry and sampling of the traces passed to ``fit``.
    grid : GridSpec
        Output grid used by ``predict``.
    init : InitConfig, optional
        Random initialization. Defaults to 1000 sources inside ``grid``.
    coarse, fine : StageConfig, optional
        Stage settings; default to ``StageConfig.coarse()`` / ``.fine()``.
    medium : Medium, optional
    radiator_config : RadiatorConfig, optional
        Forward model used during the fit.
    log_sink : file-like or callable, optional
        Receives one ``iter,loss,n_points`` line per iteration.
    """

    def __init__(self, array, grid, init=None, coarse=None, fine=None, medium=None,
                 radiator_config=None, log_sink=None):
        self.array = array
        self.grid = grid
        self.init = init
        self.coarse = coarse
        self.fine = fine
        self.medium = medium
        self.radiator_config = radiator_config
        self.log_sink = log_sink

    def _medium(self):
        return self.medium or Medium()

    def _init(self):
        if self.init is not None:
            return self.init
        lo = np.asarray(self.grid.origin)
        hi = lo + self.grid.spacing * (np.asarray(self.grid.dims) - 1)
        return optimizer.InitConfig((lo, hi))

    def fit(self, X, y=None):
        X = check_signals(X, self.array)
        history = []
        self.cloud_ = optimizer.reconstruct(
            X, self.array, self._medium(), self._init(), self.coarse, self.fine,
            self.radiator_config, sink=self.log_sink, history=history,
        )
        self.loss_curve_ = np.array([h[1] for h in history])
        self.n_points_curve_ = np.array([h[2] for h in history])
        self.n_iter_ = len(history)
        return self

    def predict(self, X=None):
        """Voxelize the fitted cloud onto ``grid`` (``X`` is ignored)."""
        check_is_fitted(self, "cloud_")
        return shader.voxelize(self.cloud_, self.grid, self.radiator_config)

    def simulate(self, array=None):
        """Traces the fitted cloud would produce at ``array`` (default: the fit array)."""
        check_is_fitted(self, "cloud_")
        return radiator.forward(self.cloud_, array or self.array, self._medium(),
                                self.radiator_config)

    def score(self, X, y=None):
        """``1 - ||simulated - X|| / ||X||``; 1 is a perfect fit."""
        X = check_signals(X, self.array)
        loss, _ = optimizer.l2_loss(self.simulate(), X)
        norm = np.linalg.norm(X.data)
        return 1.0 - loss / norm if norm > 0 else -loss


class UniversalBackProjection(BaseEstimator):
    """Back-projection baseline with the same fit/predict surface."""

    def __init__(self, array, grid, medium=None, solid_angle=False):
        self.array = array
        self.grid = grid
        self.medium = medium
        self.solid_angle = solid_angle

    def fit(self, X, y=None):
        X = check_signals(X, self.array)
        self.grid_, self.raw_ = baseline.ubp_reconstruct(
            X, self.array, self.grid, self.medium or Medium(), solid_angle=self.solid_angle)
        return self

    def predict(self, X=None):
        check_is_fitted(self, "grid_")
        return self.grid_
