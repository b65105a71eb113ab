"""Synchronization error measures and scenario/sweep drivers."""
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import io
from .config import derive_seed
from .ecology import (
    BlowUpError,
    DriveParams,
    DriveState,
    add_field_noise,
    drive_step,
    gen_gaussian_params,
    gen_sinusoidal_params,
    gen_swirl_params,
    initial_conditions,
    simulate_drive,
)
from .field import GridSpec
from .observer import ObserverConfig, ObserverState, observer_step
from .occlusion import CloudMask, advect_mask, gen_clouds
from .sensing import SensorSpec

__all__ = [
    "global_relative_error",
    "ErrorSeries",
    "ScenarioResult",
    "SWEEP_AXES",
    "build_grid",
    "build_params",
    "build_observer_config",
    "build_sensors",
    "run_scenario",
    "sweep",
]

log = logging.getLogger(__name__)

QUANTITIES = ("P", "Z", "k", "m")
EXTRA = ("k_drive", "m_drive")
SWEEP_AXES = {
    "hidden_fraction": "cloud_coverage",
    "noise_amplitude": "obs_noise",
    "cloud_speed": "cloud_speed",
    "sensor_gap": "sensor_gap",
}


def global_relative_error(truth, estimate, mode="l1", eps=1e-12):
    """Domain-wide relative error.

    ``"l1"``: ``sum|truth - estimate| / sum|truth|``.
    ``"cellwise"``: mean of ``|truth - estimate| / (|truth| + eps)``.
    """
    truth = np.asarray(truth, dtype=float)
    diff = np.abs(truth - np.asarray(estimate, dtype=float))
    if mode == "cellwise":
        return float(np.mean(diff / (np.abs(truth) + eps)))
    if mode != "l1":
        raise ValueError(f"unknown error mode {mode!r}")
    norm = np.abs(truth).sum()
    if norm == 0:
        raise ValueError("relative error undefined for an all-zero truth field")
    return float(diff.sum() / norm)


@dataclass
class ErrorSeries:
    times: list = field(default_factory=list)
    errors: dict = field(default_factory=lambda: {q: [] for q in QUANTITIES + EXTRA})

    def append(self, t, values):
        self.times.append(t)
        for key, v in values.items():
            self.errors[key].append(v)

    def __getitem__(self, key):
        return np.asarray(self.errors[key])

    def __len__(self):
        return len(self.times)

    def final(self):
        return {key: vals[-1] for key, vals in self.errors.items() if vals}

    def columns(self):
        """Quantities recorded at every time (partial ones are skipped)."""
        return [key for key, vals in self.errors.items() if len(vals) == len(self.times)]

    def rows(self):
        cols = self.columns()
        for i, t in enumerate(self.times):
            yield {"t": t, **{key: self.errors[key][i] for key in cols}}

    def to_csv(self, path):
        io.write_csv(path, self.rows(), ["t", *self.columns()])


@dataclass
class ScenarioResult:
    config: object
    series: ErrorSeries
    drive: DriveState
    observer: ObserverState
    params: DriveParams
    clean_params: DriveParams
    clouds: CloudMask


def build_grid(cfg):
    return GridSpec(cfg.nx, cfg.ny, cfg.dx, cfg.dt)


def _param_field(cfg, grid, which):
    src = getattr(cfg, f"{which}_source")
    if src == "constant":
        return grid.full(getattr(cfg, f"{which}_value"))
    if src == "gaussian":
        p = gen_gaussian_params(grid, cfg.gauss_a, cfg.gauss_c, cfg.gauss_mcenter,
                                cfg.gauss_ncenter, cfg.gauss_sigma, cfg.h)
        return getattr(p, which)
    if src == "sinusoidal":
        p = gen_sinusoidal_params(grid, a=cfg.sin_ka, c=cfg.sin_mc, d=cfg.sin_d, s=cfg.sin_ks,
                                  t=cfg.sin_mt, mcenter=cfg.sin_mcenter, h=cfg.h)
        return getattr(p, which)
    if src == "swirl":
        ic = initial_conditions(grid, "seeded-random", seed=derive_seed(cfg.seed, "swirl"), h=cfg.h)
        snap = simulate_drive(ic, DriveParams(h=cfg.h), grid, int(round(cfg.swirl_spinup / grid.dt)))
        lo, hi = getattr(cfg, f"swirl_{which}_lo"), getattr(cfg, f"swirl_{which}_hi")
        # k follows the prey pattern, m its mirror image
        base = snap.P if which == "k" else -snap.P
        return gen_swirl_params(base, lo, hi)
    path = getattr(cfg, f"{which}_file")
    f = io.read_snapshot(path)
    if f.shape != grid.shape:
        raise ValueError(f"{which}_file has shape {f.shape}, grid is {grid.shape}")
    return f


def build_params(cfg, grid=None):
    """``(noisy, clean)`` parameter sets; the drive runs on the noisy one."""
    grid = grid or build_grid(cfg)
    k = _param_field(cfg, grid, "k")
    m = _param_field(cfg, grid, "m")
    clean = DriveParams(k, m, cfg.h)
    if cfg.param_noise > 0:
        k = np.maximum(add_field_noise(k, cfg.param_noise, derive_seed(cfg.seed, "param-noise-k")), 0.0)
        m = np.maximum(add_field_noise(m, cfg.param_noise, derive_seed(cfg.seed, "param-noise-m")), 0.0)
    return DriveParams(k, m, cfg.h), clean


def build_observer_config(cfg):
    return ObserverConfig(kappa=cfg.kappa, s=cfg.s, s1=cfg.s1, s2=cfg.s2, h=cfg.h,
                          variant=cfg.variant, param_diffusion=cfg.param_diffusion,
                          k_sign=cfg.k_sign, m_sign=cfg.m_sign, ptilde_mode=cfg.ptilde_mode)


def build_sensors(cfg):
    return SensorSpec(cfg.sensor_w, cfg.sensor_h, cfg.sensor_gap, normalization=cfg.sensor_norm)


def build_clouds(cfg, grid):
    if cfg.cloud_coverage > 0 and cfg.cloud_count > 0:
        return gen_clouds(grid, cfg.cloud_count, cfg.cloud_coverage,
                          seed=derive_seed(cfg.seed, "clouds"), nu=cfg.cloud_speed,
                          sentinel=cfg.sentinel)
    return CloudMask(np.zeros(grid.shape, dtype=bool), cfg.cloud_speed, cfg.sentinel)


def _errors(drive, obs, params, clean, mode):
    k, m = np.broadcast_to(params.k, drive.P.shape), np.broadcast_to(params.m, drive.P.shape)
    kc, mc = np.broadcast_to(clean.k, drive.P.shape), np.broadcast_to(clean.m, drive.P.shape)
    return {
        "P": global_relative_error(drive.P, obs.Phat, mode),
        "Z": global_relative_error(drive.Z, obs.Zhat, mode),
        # k, m: against the noiseless fields (identical to the drive's when
        # parameter noise is off); *_drive: against the fields the drive uses
        "k": global_relative_error(kc, obs.khat, mode),
        "m": global_relative_error(mc, obs.mhat, mode),
        "k_drive": global_relative_error(k, obs.khat, mode),
        "m_drive": global_relative_error(m, obs.mhat, mode),
    }


def _write_diagnostics(cfg, err):
    if not cfg.output_dir:
        return
    os.makedirs(cfg.output_dir, exist_ok=True)
    for name, f in err.fields.items():
        f = np.asarray(f, dtype=float)
        io.write_snapshot(np.nan_to_num(f, nan=0.0, posinf=1e300, neginf=-1e300),
                          os.path.join(cfg.output_dir, f"blowup_{name}.ordf"))


def run_scenario(cfg, write_diagnostics=False, progress=None):
    """Co-evolve drive, clouds and observer; record errors every ``record_every`` steps.

    Deterministic for a given config (all randomness derives from
    ``cfg.seed``).  A blow-up re-raises :class:`BlowUpError` after optionally
    dumping the offending fields.
    """
    grid = build_grid(cfg)
    params, clean = build_params(cfg, grid)
    k, m = params.fields(grid)

    drive = initial_conditions(grid, cfg.ic_kind, cfg.ic_eps, seed=derive_seed(cfg.seed, "ic"), h=cfg.h)
    if cfg.drive_spinup > 0:
        drive = simulate_drive(drive, params, grid, int(round(cfg.drive_spinup / grid.dt)))
        drive = DriveState(drive.P, drive.Z, 0.0)

    ocfg = build_observer_config(cfg)
    if cfg.start_on_manifold:
        obs = ObserverState(drive.P.copy(), drive.Z.copy(), k.copy(), m.copy())
    else:
        obs = ObserverState.constant(grid, cfg.phat0, cfg.zhat0, cfg.khat0, cfg.mhat0)
        if cfg.variant == "occluded-sync":
            obs = ObserverState(obs.Phat, obs.Zhat, k.copy(), m.copy())

    clouds = build_clouds(cfg, grid)
    sensors = build_sensors(cfg)
    noise_rng = np.random.default_rng(derive_seed(cfg.seed, "obs-noise"))
    series = ErrorSeries()

    try:
        for i in range(cfg.steps + 1):
            if i % cfg.record_every == 0:
                series.append(i * grid.dt, _errors(drive, obs, params, clean, cfg.error_mode))
                if progress:
                    progress(i, series)
            if i == cfg.steps:
                break
            Pobs = add_field_noise(drive.P, cfg.obs_noise, noise_rng) if cfg.obs_noise > 0 else drive.P
            mask = clouds.mask if clouds.mask.any() else None
            obs = observer_step(obs, Pobs, ocfg, grid, mask=mask, sensors=sensors)
            drive = drive_step(drive, params, grid)
            clouds = advect_mask(clouds, grid.dt, grid.dx)
    except BlowUpError as err:
        log.error("scenario blew up: %s", err)
        if write_diagnostics:
            _write_diagnostics(cfg, err)
        raise
    return ScenarioResult(cfg, series, drive, obs, params, clean, clouds)


def sweep(cfg, axis, values, progress=None):
    """Terminal errors of ``run_scenario`` for each value along ``axis``.

    Every point reuses the same seed, hence the same initial conditions and
    cloud placement.  Blow-ups become ``status="failed"`` rows.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    key = SWEEP_AXES[axis]
    rows = []
    for v in values:
        v = int(v) if key == "sensor_gap" else float(v)
        point = cfg.replace(**{key: v})
        row = {axis: v, "status": "ok", "message": ""}
        try:
            res = run_scenario(point)
            row.update(res.series.final())
        except (BlowUpError, ValueError) as err:
            row.update({q: float("nan") for q in QUANTITIES + EXTRA})
            row.update(status="failed", message=str(err))
        row["t"] = point.epoch
        rows.append(row)
        if progress:
            progress(row)
    return rows
