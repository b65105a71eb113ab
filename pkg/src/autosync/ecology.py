"""Two-species plankton drive system and its synthetic-data generators."""
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .field import laplacian_zero_flux

__all__ = [
    "BlowUpError",
    "DriveParams",
    "DriveState",
    "coexistence_state",
    "check_blowup",
    "drive_step",
    "simulate_drive",
    "gen_gaussian_params",
    "gen_sinusoidal_params",
    "gen_swirl_params",
    "add_field_noise",
    "initial_conditions",
]

BLOWUP_THRESHOLD = 1e6


class BlowUpError(FloatingPointError):
    """Raised when an explicit step leaves the representable/stable range."""

    def __init__(self, message, t=None, fields=None):
        super().__init__(message)
        self.t = t
        self.fields = fields or {}


@dataclass(frozen=True)
class DriveParams:
    """Reaction parameters.  ``k`` and ``m`` may be scalars or fields."""

    k: object = 2.0
    m: object = 0.6
    h: float = 0.4

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"half-saturation h must be positive, got {self.h}")
        for name in ("k", "m"):
            v = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite")
            if np.any(v < 0):
                raise ValueError(f"{name} must be nonnegative")

    def fields(self, grid):
        """``(k, m)`` broadcast to full ``(ny, nx)`` arrays."""
        k = np.broadcast_to(np.asarray(self.k, dtype=float), grid.shape).copy()
        m = np.broadcast_to(np.asarray(self.m, dtype=float), grid.shape).copy()
        return k, m


@dataclass(frozen=True)
class DriveState:
    P: np.ndarray
    Z: np.ndarray
    t: float = 0.0

    def copy(self):
        return replace(self, P=self.P.copy(), Z=self.Z.copy())


def coexistence_state(k=2.0, m=0.6, h=0.4):
    """Homogeneous equilibrium ``(P*, Z*)`` with both species present."""
    k = np.asarray(k, dtype=float)
    m = np.asarray(m, dtype=float)
    p = m * h / (k - m)
    z = (1.0 - p) * (p + h)
    return p, z


def check_blowup(t, **fields):
    for name, f in fields.items():
        if not np.all(np.isfinite(f)) or np.max(np.abs(f)) > BLOWUP_THRESHOLD:
            raise BlowUpError(f"{name} blew up at t={t:g}", t=t, fields=fields)


def drive_step(state, params, grid):
    """One forward-Euler step of the reaction-diffusion drive."""
    P, Z = state.P, state.Z
    h, dt = params.h, grid.dt
    lp = laplacian_zero_flux(P, grid.dx)
    lz = laplacian_zero_flux(Z, grid.dx)
    graze = P * Z / (P + h)
    Pn = P + dt * (lp + P * (1.0 - P) - graze)
    Zn = Z + dt * (lz + params.k * graze - params.m * Z)
    t = state.t + dt
    check_blowup(t, P=Pn, Z=Zn)
    return DriveState(Pn, Zn, t)


def simulate_drive(state, params, grid, steps, every=None):
    """Advance ``steps`` steps; optionally collect states every ``every`` steps."""
    frames = []
    for i in range(steps):
        if every and i % every == 0:
            frames.append(state)
        state = drive_step(state, params, grid)
    if every:
        frames.append(state)
        return state, frames
    return state


def gen_gaussian_params(grid, a=2.0, c=0.6, mcenter=300.0, ncenter=900.0, sigma=400.0, h=0.4):
    """Gaussian bump parameters centred at ``(ncenter/2, mcenter/2)`` in cell units.

    The defaults are tuned for an 864x288 lattice; pass scaled centres for
    smaller grids.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x, y = grid.coords()
    bump = np.exp(-((x - ncenter / 2) ** 2 / (2 * sigma**2) + (y - mcenter / 2) ** 2 / (2 * sigma**2)))
    return DriveParams(k=a * bump, m=c * bump, h=h)


def gen_sinusoidal_params(grid, a=0.2, b=None, c=0.6, d=np.pi / 2, s=0.5, t=1.5, mcenter=300.0, h=0.4):
    """Checkerboard-like cos*sin parameters; ``b`` defaults to ``pi/(mcenter/2)``."""
    if b is None:
        b = np.pi / (mcenter / 2)
    x, y = grid.coords()
    wave = np.cos(b * x + d) * np.sin(b * y)
    return DriveParams(k=a * wave + s, m=c * wave + t, h=h)


def gen_swirl_params(snapshot, lo, hi):
    """Rescale a drive snapshot affinely onto ``[lo, hi]``."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    snap = np.asarray(snapshot, dtype=float)
    smin, smax = snap.min(), snap.max()
    if smax == smin:
        warnings.warn("constant snapshot; swirl parameter set to range midpoint", RuntimeWarning)
        return np.full(snap.shape, (lo + hi) / 2)
    out = lo + (snap - smin) * ((hi - lo) / (smax - smin))
    # pin the endpoints against rounding
    out[snap == smin] = lo
    out[snap == smax] = hi
    return out


def add_field_noise(f, amplitude, seed=None):
    """Add Gaussian noise scaled by ``amplitude`` times the field's range.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if amplitude < 0:
        raise ValueError("noise amplitude must be nonnegative")
    f = np.asarray(f, dtype=float)
    if amplitude == 0:
        return f.copy()
    rng = np.random.default_rng(seed)
    return f + amplitude * (f.max() - f.min()) * rng.standard_normal(f.shape)


def initial_conditions(grid, kind="planar-perturbation", eps=1e-2, seed=None, k=2.0, m=0.6, h=0.4):
    """Coexistence state plus a small symmetry-breaking perturbation.

    ``planar-perturbation``: P gets a quadratic profile along a slanted
    direction, Z a linear cross-gradient; both bounded by ``eps`` in
    magnitude.  ``seeded-random``: independent uniform noise in
    ``[-eps, eps]`` on each species.
    """
    p_star, z_star = coexistence_state(k, m, h)
    if kind == "planar-perturbation":
        x, y = grid.coords()
        u = (x - 0.1 * y) / max(grid.nx, 1)
        q = (u - 0.25) * (u - 0.75)
        qmax = np.max(np.abs(q))
        q = q / qmax if qmax > 0 else q
        lin = (x - grid.nx / 2) / max(grid.nx, 1) + (y - grid.ny / 2) / max(grid.ny, 1)
        P = p_star - eps * q
        Z = z_star - eps * lin
    elif kind == "seeded-random":
        rng = np.random.default_rng(seed)
        P = p_star + eps * rng.uniform(-1.0, 1.0, grid.shape)
        Z = z_star + eps * rng.uniform(-1.0, 1.0, grid.shape)
    else:
        raise ValueError(f"unknown initial-condition kind {kind!r}")
    P = np.broadcast_to(P, grid.shape).astype(float)
    Z = np.broadcast_to(Z, grid.shape).astype(float)
    return DriveState(P, Z, 0.0)
