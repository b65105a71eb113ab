"""Synthetic cloud masks: generation, transport, coverage and sentinel encoding."""
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "DEFAULT_SENTINEL",
    "CloudMask",
    "gen_clouds",
    "advect_mask",
    "coverage",
    "apply_sentinel",
    "detect_sentinel",
    "as_mask",
]

DEFAULT_SENTINEL = 9999.0
COVERAGE_TOL = 0.02
MAX_COVERAGE = 0.98


@dataclass(frozen=True)
class CloudMask:
    """Boolean occlusion field (``True`` = hidden) moving in +x at speed ``nu``.

    ``carry`` is the fractional part of the accumulated shift in cells; the
    mask itself only ever moves by whole cells.
    """

    mask: np.ndarray
    nu: float = 0.0
    sentinel: float = DEFAULT_SENTINEL
    carry: float = 0.0

    def __post_init__(self):
        if not 0 <= self.sentinel <= 2:
            return
        raise ValueError(f"sentinel {self.sentinel} lies inside the data range [0, 2]")

    @property
    def shape(self):
        return self.mask.shape


def as_mask(mask, shape=None):
    """Accept a CloudMask, boolean array or ``None`` (nothing hidden)."""
    if mask is None:
        if shape is None:
            raise ValueError("shape required for an empty mask")
        return np.zeros(shape, dtype=bool)
    m = np.asarray(getattr(mask, "mask", mask), dtype=bool)
    if shape is not None and m.shape != tuple(shape):
        raise ValueError(f"mask shape {m.shape} does not match {tuple(shape)}")
    return m


def _paint(grid, centers, radii_x, radii_y, scale):
    x, y = grid.coords()
    out = np.zeros(grid.shape, dtype=bool)
    for (cx, cy), rx, ry in zip(centers, radii_x, radii_y):
        ddx = np.abs(x - cx)
        ddx = np.minimum(ddx, grid.nx - ddx)  # clouds wrap in x
        out |= (ddx / (rx * scale)) ** 2 + ((y - cy) / (ry * scale)) ** 2 <= 1.0
    return out


def gen_clouds(grid, count=30, target_coverage=0.658, seed=None, nu=0.0, sentinel=DEFAULT_SENTINEL):
    """Place ``count`` random axis-aligned ellipses covering ~``target_coverage``.

    Centres, relative sizes and aspect ratios (in [1, 3]) are drawn from the
    seeded generator; a common scale factor is then bisected until the
    realized coverage is within two percentage points of the target.
    """
    if count < 0:
        raise ValueError("cloud count must be nonnegative")
    if not 0 <= target_coverage < 1:
        raise ValueError(f"target coverage must lie in [0, 1), got {target_coverage}")
    if target_coverage > MAX_COVERAGE:
        raise ValueError(f"target coverage {target_coverage} is infeasible (max {MAX_COVERAGE})")
    if count == 0 or target_coverage == 0:
        return CloudMask(np.zeros(grid.shape, dtype=bool), nu, sentinel)

    rng = np.random.default_rng(seed)
    centers = np.column_stack([rng.uniform(0, grid.nx, count), rng.uniform(0, grid.ny, count)])
    size = rng.uniform(0.5, 1.5, count)
    aspect = rng.uniform(1.0, 3.0, count)
    wide = rng.random(count) < 0.5
    rx = np.where(wide, size * aspect, size)
    ry = np.where(wide, size, size * aspect)

    lo, hi = 0.0, 2.0 * np.hypot(grid.nx, grid.ny)
    best = None
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        mask = _paint(grid, centers, rx, ry, mid)
        cov = mask.mean()
        if best is None or abs(cov - target_coverage) < abs(best.mean() - target_coverage):
            best = mask
        if abs(cov - target_coverage) <= COVERAGE_TOL / 4:
            break
        if cov < target_coverage:
            lo = mid
        else:
            hi = mid
    if abs(best.mean() - target_coverage) > COVERAGE_TOL:
        raise ValueError(
            f"could not reach coverage {target_coverage:.3f} with {count} clouds "
            f"(best {best.mean():.3f})"
        )
    return CloudMask(best, nu, sentinel)


def advect_mask(c, elapsed, dx=1.0):
    """Transport the mask ``nu * elapsed / dx`` cells in +x with periodic wrap.

    Fractional progress is carried between calls, so repeated small steps
    advance the clouds by whole cells at the right average rate.
    """
    total = c.carry + c.nu * elapsed / dx
    cells = int(np.floor(total))
    return replace(c, mask=np.roll(c.mask, cells, axis=1), carry=total - cells)


def coverage(c):
    return float(np.mean(as_mask(c)))


def apply_sentinel(P, c):
    """Copy of ``P`` with hidden cells replaced by the sentinel value."""
    out = np.array(P, dtype=float, copy=True)
    out[as_mask(c, out.shape)] = c.sentinel if isinstance(c, CloudMask) else DEFAULT_SENTINEL
    return out


def detect_sentinel(P, sentinel=DEFAULT_SENTINEL):
    """Boolean mask of cells carrying the sentinel value."""
    return np.asarray(P) == sentinel
