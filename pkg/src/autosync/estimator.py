"""scikit-learn style wrapper around the observers.

``X`` is a stack of observation frames shaped ``(T, ny, nx)``.  Occluded
cells are NaN or carry the sentinel value.  Each frame drives
``steps_per_frame`` observer steps.
"""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .config import DEFAULT_KAPPA
from .field import GridSpec
from .metrics import global_relative_error
from .observer import ObserverConfig, ObserverState, observer_step
from .occlusion import DEFAULT_SENTINEL
from .sensing import SensorSpec


class AutosyncObserver(BaseEstimator):
    """Estimate hidden ``Z`` and the ``k``, ``m`` fields from frames of ``P``.

    After ``fit`` the learned parameter fields are ``k_`` and ``m_`` and the
    final observer state is ``state_``.  ``partial_fit`` keeps stepping from
    that state.  ``transform`` works on a copy and leaves the fit untouched.
    """

    def __init__(self, variant="occluded-autosync", kappa=None, s=30.0, s1=0.2, s2=0.6, h=0.4,
                 dx=2.0, dt=0.2, steps_per_frame=1, sentinel=DEFAULT_SENTINEL,
                 phat0=2.0, zhat0=2.0, khat0=5.0, mhat0=5.0,
                 sensor_w=2, sensor_h=2, sensor_gap=1, ptilde_mode="mean",
                 k_sign=None, m_sign=None, param_diffusion=None):
        self.variant = variant
        self.kappa = kappa
        self.s = s
        self.s1 = s1
        self.s2 = s2
        self.h = h
        self.dx = dx
        self.dt = dt
        self.steps_per_frame = steps_per_frame
        self.sentinel = sentinel
        self.phat0 = phat0
        self.zhat0 = zhat0
        self.khat0 = khat0
        self.mhat0 = mhat0
        self.sensor_w = sensor_w
        self.sensor_h = sensor_h
        self.sensor_gap = sensor_gap
        self.ptilde_mode = ptilde_mode
        self.k_sign = k_sign
        self.m_sign = m_sign
        self.param_diffusion = param_diffusion

    def _config(self):
        kappa = DEFAULT_KAPPA[self.variant] if self.kappa is None and self.variant in DEFAULT_KAPPA else self.kappa
        return ObserverConfig(kappa=kappa, s=self.s, s1=self.s1, s2=self.s2, h=self.h,
                              variant=self.variant, param_diffusion=self.param_diffusion,
                              k_sign=self.k_sign, m_sign=self.m_sign, ptilde_mode=self.ptilde_mode)

    def _frames(self, X):
        X = check_array(X, allow_nd=True, ensure_all_finite="allow-nan", dtype=np.float64,
                        ensure_min_samples=1)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3:
            raise ValueError(f"expected frames shaped (T, ny, nx), got {X.shape}")
        hidden = np.isnan(X) | (X == self.sentinel)
        return np.where(hidden, 0.0, X), hidden

    def _run(self, state, frames, hidden, grid, cfg, sensors, collect=False):
        if int(self.steps_per_frame) < 1:
            raise ValueError("steps_per_frame must be >= 1")
        out = []
        for P, mask in zip(frames, hidden):
            mask = mask if mask.any() else None
            for _ in range(int(self.steps_per_frame)):
                state = observer_step(state, P, cfg, grid, mask=mask, sensors=sensors)
            if collect:
                out.append(np.stack([state.Phat, state.Zhat]))
        return state, (np.asarray(out) if collect else None)

    def _setup(self, shape):
        grid = GridSpec(shape[1], shape[0], self.dx, self.dt)
        sensors = SensorSpec(self.sensor_w, self.sensor_h, self.sensor_gap) if self.variant == "coarse" else None
        return grid, self._config(), sensors

    def fit(self, X, y=None):
        frames, hidden = self._frames(X)
        grid, cfg, sensors = self._setup(frames.shape[1:])
        state = ObserverState.constant(grid, self.phat0, self.zhat0, self.khat0, self.mhat0)
        self.grid_ = grid
        self.n_frames_ = 0
        return self._absorb(state, frames, hidden, grid, cfg, sensors)

    def partial_fit(self, X, y=None):
        if not hasattr(self, "state_"):
            return self.fit(X)
        frames, hidden = self._frames(X)
        if frames.shape[1:] != self.grid_.shape:
            raise ValueError(f"frame shape {frames.shape[1:]} does not match fitted grid {self.grid_.shape}")
        _, cfg, sensors = self._setup(frames.shape[1:])
        return self._absorb(self.state_, frames, hidden, self.grid_, cfg, sensors)

    def _absorb(self, state, frames, hidden, grid, cfg, sensors):
        state, _ = self._run(state, frames, hidden, grid, cfg, sensors)
        self.state_ = state
        self.k_ = state.khat
        self.m_ = state.mhat
        self.n_frames_ += len(frames)
        return self

    def transform(self, X):
        """Per-frame ``(Phat, Zhat)`` stacked as ``(T, 2, ny, nx)``, continuing from the fit."""
        check_is_fitted(self, "state_")
        frames, hidden = self._frames(X)
        if frames.shape[1:] != self.grid_.shape:
            raise ValueError(f"frame shape {frames.shape[1:]} does not match fitted grid {self.grid_.shape}")
        _, cfg, sensors = self._setup(frames.shape[1:])
        _, out = self._run(self.state_.copy(), frames, hidden, self.grid_, cfg, sensors, collect=True)
        return out

    def predict(self, X):
        """Hidden-species estimates, one ``(ny, nx)`` field per frame."""
        return self.transform(X)[:, 1]

    def score(self, X, y=None):
        """Negative relative L1 error of ``Phat`` against the visible cells of ``X``."""
        est = self.transform(X)[:, 0]
        frames, hidden = self._frames(X)
        vis = ~hidden
        if not vis.any():
            raise ValueError("no visible cells to score against")
        return -global_relative_error(frames[vis], est[vis])
