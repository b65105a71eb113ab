"""Response systems that synchronize to observed phytoplankton.

Four variants are provided:

``full``
    Every cell observed; state coupling plus adaptation of ``k`` and ``m``
    with a single gain ``s``.  The zooplankton grazing denominator uses the
    observed ``P``.
``occluded-sync``
    State synchronization only, coupling switched off under clouds.
    Parameters are held at the values in the state.
``occluded-autosync``
    Switched coupling plus adaptation with gains ``s1``/``s2``.
``coarse``
    Coupling through per-sensor mean innovations; parameters diffuse.

All updates are simultaneous forward-Euler steps from time level n.
"""
from dataclasses import dataclass, replace

import numpy as np

from .ecology import check_blowup
from .field import clamp_range, laplacian_zero_flux
from .occlusion import as_mask
from . import sensing

__all__ = [
    "VARIANTS",
    "ObserverConfig",
    "ObserverState",
    "switch_H",
    "response_step_full",
    "response_step_occluded",
    "response_step_autosync",
    "response_step_coarse",
    "observer_step",
]

VARIANTS = ("full", "occluded-sync", "occluded-autosync", "coarse")

# literal adaptation signs: dk/dt = -s(P - Phat) for the fully observed
# system, +s1(H[P] - Phat) once clouds are present
_DEFAULT_SIGNS = {
    "full": (-1.0, -1.0),
    "occluded-sync": (1.0, 1.0),
    "occluded-autosync": (1.0, 1.0),
    "coarse": (1.0, 1.0),
}


@dataclass(frozen=True)
class ObserverConfig:
    kappa: float = 2.4
    s: float = 30.0
    s1: float = 0.2
    s2: float = 0.6
    h: float = 0.4
    variant: str = "full"
    param_diffusion: bool = None
    k_sign: float = None
    m_sign: float = None
    clamp_lo: float = 0.0
    clamp_hi: float = 2.0
    ptilde_mode: str = "mean"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown observer variant {self.variant!r}")
        for name in ("kappa", "s", "s1", "s2", "h"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.ptilde_mode not in ("mean", "corrected"):
            raise ValueError(f"unknown ptilde_mode {self.ptilde_mode!r}")
        if self.param_diffusion is None:
            object.__setattr__(self, "param_diffusion", self.variant == "coarse")
        ks, ms = _DEFAULT_SIGNS[self.variant]
        if self.k_sign is None:
            object.__setattr__(self, "k_sign", ks)
        if self.m_sign is None:
            object.__setattr__(self, "m_sign", ms)


@dataclass(frozen=True)
class ObserverState:
    Phat: np.ndarray
    Zhat: np.ndarray
    khat: np.ndarray
    mhat: np.ndarray
    t: float = 0.0

    @classmethod
    def constant(cls, grid, P=2.0, Z=2.0, k=5.0, m=5.0):
        """Uniform start; the defaults are the usual far-from-truth guesses."""
        return cls(grid.full(P), grid.full(Z), grid.full(k), grid.full(m))

    def copy(self):
        return replace(self, Phat=self.Phat.copy(), Zhat=self.Zhat.copy(),
                       khat=self.khat.copy(), mhat=self.mhat.copy())


def switch_H(Pobs, mask, Phat):
    """Observed value where visible, the observer's own estimate under cloud."""
    hidden = as_mask(mask, np.shape(Phat))
    return np.where(hidden, Phat, Pobs)


def _finish(o, Ph, Zh, kh, mh, cfg, dt):
    t = o.t + dt
    check_blowup(t, Phat=Ph, Zhat=Zh, khat=kh, mhat=mh)
    Ph = clamp_range(Ph, cfg.clamp_lo, cfg.clamp_hi)
    Zh = clamp_range(Zh, cfg.clamp_lo, cfg.clamp_hi)
    return ObserverState(Ph, Zh, np.maximum(kh, 0.0), np.maximum(mh, 0.0), t)


def _adapt(o, err, g1, g2, cfg, grid):
    dt = grid.dt
    dk = cfg.k_sign * g1 * err
    dm = cfg.m_sign * g2 * err * o.Phat
    if cfg.param_diffusion:
        dk = laplacian_zero_flux(o.khat, grid.dx) + dk
        dm = laplacian_zero_flux(o.mhat, grid.dx) + dm
    return o.khat + dt * dk, o.mhat + dt * dm


def response_step_full(o, Pobs, cfg, grid):
    """Fully observed state coupling and single-gain parameter adaptation."""
    Ph, Zh, h, dt = o.Phat, o.Zhat, cfg.h, grid.dt
    err = Pobs - Ph
    lp = laplacian_zero_flux(Ph, grid.dx)
    lz = laplacian_zero_flux(Zh, grid.dx)
    Pn = Ph + dt * (lp + Ph * (1.0 - Ph) - Ph * Zh / (Ph + h) + cfg.kappa * err)
    Zn = Zh + dt * (lz + o.khat * (Ph * Zh / (Pobs + h)) - o.mhat * Zh)
    kn, mn = _adapt(o, err, cfg.s, cfg.s, cfg, grid)
    return _finish(o, Pn, Zn, kn, mn, cfg, dt)


def response_step_occluded(o, Pobs, mask, cfg, grid):
    """State synchronization with coupling switched off on hidden cells."""
    Ph, Zh, h, dt = o.Phat, o.Zhat, cfg.h, grid.dt
    H = switch_H(Pobs, mask, Ph)
    lp = laplacian_zero_flux(Ph, grid.dx)
    lz = laplacian_zero_flux(Zh, grid.dx)
    graze = Ph * Zh / (Ph + h)
    Pn = Ph + dt * (lp + Ph * (1.0 - Ph) - graze + cfg.kappa * (H - Ph))
    Zn = Zh + dt * (lz + o.khat * graze - o.mhat * Zh)
    return _finish(o, Pn, Zn, o.khat, o.mhat, cfg, dt)


def response_step_autosync(o, Pobs, mask, cfg, grid):
    """Switched coupling with simultaneous adaptation of ``k`` and ``m``."""
    Ph, Zh, h, dt = o.Phat, o.Zhat, cfg.h, grid.dt
    H = switch_H(Pobs, mask, Ph)
    err = H - Ph
    lp = laplacian_zero_flux(Ph, grid.dx)
    lz = laplacian_zero_flux(Zh, grid.dx)
    Pn = Ph + dt * (lp + Ph * (1.0 - Ph) - Ph * Zh / (Ph + h) + cfg.kappa * err)
    Zn = Zh + dt * (lz + o.khat * (Ph * Zh / (H + h)) - o.mhat * Zh)
    kn, mn = _adapt(o, err, cfg.s1, cfg.s2, cfg, grid)
    return _finish(o, Pn, Zn, kn, mn, cfg, dt)


def coarse_signals(o, Pobs, sensors, grid, mask=None, ptilde_mode="mean"):
    """Per-cell coupling signal ``G`` and the ``P~`` field seen by the observer.

    Sensors with any hidden cell are treated as unavailable.  Off-sensor and
    unavailable cells get ``G = 0`` and ``P~ = Phat``.  With
    ``ptilde_mode="mean"`` the sensor average is held constant across the
    patch; ``"corrected"`` uses ``Phat + G`` so the sub-patch structure of
    the estimate is kept.
    """
    shape = o.Phat.shape
    G = sensing.innovation(Pobs, o.Phat, sensors, grid.dx)
    avail = np.ones(G.shape, dtype=bool)
    if mask is not None:
        avail = sensing.sensor_available(as_mask(mask, shape), sensors)
    G = np.where(avail, G, 0.0)
    on = sensing.paint(avail, sensors, shape, fill=False)
    Gf = sensing.paint(G, sensors, shape, fill=0.0)
    if ptilde_mode == "mean":
        avg = sensing.paint(sensing.local_averages(Pobs, sensors), sensors, shape, fill=0.0)
        Pt = np.where(on, avg, o.Phat)
    else:
        Pt = o.Phat + Gf
    return Gf, Pt, on


def response_step_coarse(o, Pobs, sensors, cfg, grid, mask=None):
    """Observer driven only by sensor-patch averages of the observations."""
    Ph, Zh, h, dt = o.Phat, o.Zhat, cfg.h, grid.dt
    G, Pt, _ = coarse_signals(o, Pobs, sensors, grid, mask, cfg.ptilde_mode)
    lp = laplacian_zero_flux(Ph, grid.dx)
    lz = laplacian_zero_flux(Zh, grid.dx)
    Pn = Ph + dt * (lp + Ph * (1.0 - Ph) - Ph * Zh / (Ph + h) + cfg.kappa * G)
    Zn = Zh + dt * (lz + o.khat * (Ph * Zh / (Pt + h)) - o.mhat * Zh)
    kn, mn = _adapt(o, Pt - Ph, cfg.s1, cfg.s2, cfg, grid)
    return _finish(o, Pn, Zn, kn, mn, cfg, dt)


def observer_step(o, Pobs, cfg, grid, mask=None, sensors=None):
    """Dispatch one step to the configured variant."""
    if cfg.variant == "full":
        if mask is not None and as_mask(mask).any():
            raise ValueError("the fully observed variant cannot take an occlusion mask")
        return response_step_full(o, Pobs, cfg, grid)
    if cfg.variant == "occluded-sync":
        return response_step_occluded(o, Pobs, mask, cfg, grid)
    if cfg.variant == "occluded-autosync":
        return response_step_autosync(o, Pobs, mask, cfg, grid)
    if sensors is None:
        sensors = sensing.SensorSpec()
    return response_step_coarse(o, Pobs, sensors, cfg, grid, mask)
