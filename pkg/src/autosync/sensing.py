"""Coarse sensor lattices: patch averages and per-patch innovations."""
from dataclasses import dataclass

import numpy as np

__all__ = ["SensorSpec", "local_averages", "innovation", "sensor_available", "paint", "sensor_cells"]


@dataclass(frozen=True)
class SensorSpec:
    """Rectangular sensors of ``patch_w x patch_h`` cells separated by ``gap`` cells.

    Sensors that would cross the grid edge are dropped.  ``normalization``
    selects how the innovation sum is scaled: ``"patch"`` divides by the
    sensor's cell count, ``"grid"`` by ``dx*dy`` of the simulation grid.
    """

    patch_w: int = 2
    patch_h: int = 2
    gap: int = 1
    origin: tuple = (0, 0)
    normalization: str = "patch"

    def __post_init__(self):
        if self.patch_w < 1 or self.patch_h < 1:
            raise ValueError("sensor patches need at least one cell per side")
        if self.gap < 0:
            raise ValueError("sensor gap must be nonnegative")
        if self.normalization not in ("patch", "grid"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    def layout(self, shape):
        """Sensor counts ``(nsy, nsx)`` that fit inside ``shape``."""
        ny, nx = shape
        ox, oy = self.origin
        px, py = self.patch_w + self.gap, self.patch_h + self.gap
        nsx = max(0, (nx - ox - self.patch_w) // px + 1) if nx - ox >= self.patch_w else 0
        nsy = max(0, (ny - oy - self.patch_h) // py + 1) if ny - oy >= self.patch_h else 0
        return nsy, nsx


def _blocks(f, spec):
    """View of the sensor cells as ``(nsy, patch_h, nsx, patch_w)``."""
    f = np.asarray(f)
    nsy, nsx = spec.layout(f.shape)
    ox, oy = spec.origin
    px, py = spec.patch_w + spec.gap, spec.patch_h + spec.gap
    region = f[oy:oy + nsy * py, ox:ox + nsx * px]
    pad_y, pad_x = nsy * py - region.shape[0], nsx * px - region.shape[1]
    if pad_y or pad_x:
        region = np.pad(region, ((0, pad_y), (0, pad_x)))
    return region.reshape(nsy, py, nsx, px)[:, :spec.patch_h, :, :spec.patch_w]


def local_averages(P, spec):
    return _blocks(P, spec).mean(axis=(1, 3))


def innovation(P, Phat, spec, dx=1.0, dy=None):
    """Per-sensor sum of ``P - Phat`` divided by the chosen normalization."""
    total = _blocks(np.asarray(P) - np.asarray(Phat), spec).sum(axis=(1, 3))
    if spec.normalization == "patch":
        return total / (spec.patch_w * spec.patch_h)
    return total / (dx * (dx if dy is None else dy))


def sensor_available(mask, spec):
    """Per-sensor flag: ``True`` when none of the sensor's cells is hidden."""
    return ~_blocks(np.asarray(mask, dtype=bool), spec).any(axis=(1, 3))


def paint(values, spec, shape, fill=0.0):
    """Scatter per-sensor values back onto their cells; other cells get ``fill``."""
    values = np.asarray(values)
    out = np.full(shape, fill, dtype=np.result_type(values, type(fill)))
    nsy, nsx = spec.layout(shape)
    if nsy == 0 or nsx == 0:
        return out
    ox, oy = spec.origin
    px, py = spec.patch_w + spec.gap, spec.patch_h + spec.gap
    block = np.repeat(np.repeat(values, spec.patch_h, axis=0), spec.patch_w, axis=1)
    rows = (oy + np.arange(nsy)[:, None] * py + np.arange(spec.patch_h)[None, :]).ravel()
    cols = (ox + np.arange(nsx)[:, None] * px + np.arange(spec.patch_w)[None, :]).ravel()
    out[np.ix_(rows, cols)] = block
    return out


def sensor_cells(spec, shape):
    """Boolean field marking cells that belong to some sensor."""
    nsy, nsx = spec.layout(shape)
    return paint(np.ones((nsy, nsx), dtype=bool), spec, shape, fill=False)
