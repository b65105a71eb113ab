"""Flat ``key = value`` scenario configuration, seed derivation and presets."""
import dataclasses
import math
import os
import zlib
from dataclasses import dataclass, fields

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "parse_config",
    "render_config",
    "load_config",
    "derive_seed",
    "PRESETS",
    "preset",
]

PARAM_SOURCES = ("constant", "gaussian", "sinusoidal", "swirl", "file")
DEFAULT_KAPPA = {"full": 2.4, "occluded-sync": 2.6, "occluded-autosync": 0.625, "coarse": 0.625}
_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    def __init__(self, message, line=None, key=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master, stream):
    """Independent 63-bit sub-seed for a named stream.

    ``splitmix64(master XOR splitmix64(crc32(stream)))``, so each component
    (clouds, noise, initial conditions, ...) is reproducible on its own.
    """
    tag = _splitmix64(zlib.crc32(stream.encode("utf-8")))
    return _splitmix64((int(master) & _MASK64) ^ tag) >> 1


@dataclass
class ScenarioConfig:
    # grid
    nx: int = 128
    ny: int = 64
    dx: float = 2.0
    dt: float = 0.2
    # drive
    h: float = 0.4
    k_source: str = "constant"
    m_source: str = "constant"
    k_value: float = 2.0
    m_value: float = 0.6
    gauss_a: float = 2.0
    gauss_c: float = 0.6
    gauss_mcenter: float = 300.0
    gauss_ncenter: float = 900.0
    gauss_sigma: float = 400.0
    sin_ka: float = 0.2
    sin_ks: float = 0.5
    sin_mc: float = 0.6
    sin_mt: float = 1.5
    sin_d: float = math.pi / 2
    sin_mcenter: float = 300.0
    swirl_k_lo: float = 1.8
    swirl_k_hi: float = 2.4
    swirl_m_lo: float = 0.5
    swirl_m_hi: float = 0.7
    swirl_spinup: float = 1000.0
    k_file: str = ""
    m_file: str = ""
    param_noise: float = 0.02
    ic_kind: str = "planar-perturbation"
    ic_eps: float = 0.01
    drive_spinup: float = 0.0
    # observer
    variant: str = "occluded-autosync"
    kappa: float = None
    s: float = 30.0
    s1: float = 0.2
    s2: float = 0.6
    k_sign: float = None
    m_sign: float = None
    param_diffusion: bool = None
    ptilde_mode: str = "mean"
    phat0: float = 2.0
    zhat0: float = 2.0
    khat0: float = 5.0
    mhat0: float = 5.0
    start_on_manifold: bool = False
    # clouds and noise
    cloud_count: int = 30
    cloud_coverage: float = 0.0
    cloud_speed: float = 0.5
    sentinel: float = 9999.0
    obs_noise: float = 0.0
    # sensors
    sensor_w: int = 2
    sensor_h: int = 2
    sensor_gap: int = 1
    sensor_norm: str = "patch"
    # run
    epoch: float = 2400.0
    record_every: int = 50
    error_mode: str = "l1"
    output_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        if self.kappa is None:
            self.kappa = DEFAULT_KAPPA.get(self.variant, 0.625)
        default_sign = -1.0 if self.variant == "full" else 1.0
        if self.k_sign is None:
            self.k_sign = default_sign
        if self.m_sign is None:
            self.m_sign = default_sign
        if self.param_diffusion is None:
            self.param_diffusion = self.variant == "coarse"

    @property
    def steps(self):
        return int(round(self.epoch / self.dt))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def validate(self, lines=None, base_dir=None):
        """Raise ConfigError for the first violated invariant."""
        lines = lines or {}

        def fail(key, msg):
            raise ConfigError(f"{key}: {msg}", lines.get(key), key)

        if self.nx < 1 or self.ny < 1:
            fail("nx" if self.nx < 1 else "ny", "grid dimensions must be positive")
        for key in ("dx", "dt", "h", "epoch"):
            v = getattr(self, key)
            if not (math.isfinite(v) and v > 0):
                fail(key, f"must be positive, got {v}")
        for key in ("k_source", "m_source"):
            if getattr(self, key) not in PARAM_SOURCES:
                fail(key, f"must be one of {', '.join(PARAM_SOURCES)}")
        from .observer import VARIANTS

        if self.variant not in VARIANTS:
            fail("variant", f"must be one of {', '.join(VARIANTS)}")
        if self.ic_kind not in ("planar-perturbation", "seeded-random"):
            fail("ic_kind", "must be planar-perturbation or seeded-random")
        if self.ptilde_mode not in ("mean", "corrected"):
            fail("ptilde_mode", "must be mean or corrected")
        if self.sensor_norm not in ("patch", "grid"):
            fail("sensor_norm", "must be patch or grid")
        if self.error_mode not in ("l1", "cellwise"):
            fail("error_mode", "must be l1 or cellwise")
        for key in ("k_sign", "m_sign"):
            if getattr(self, key) not in (-1.0, 1.0):
                fail(key, "must be +1 or -1")
        if not 0 <= self.cloud_coverage < 1:
            fail("cloud_coverage", "must lie in [0, 1)")
        for key in ("cloud_count", "sensor_gap", "param_noise", "obs_noise", "ic_eps",
                    "drive_spinup", "swirl_spinup"):
            if getattr(self, key) < 0:
                fail(key, "must be nonnegative")
        for key in ("sensor_w", "sensor_h"):
            if getattr(self, key) < 1:
                fail(key, "must be at least 1")
        if 0 <= self.sentinel <= 2:
            fail("sentinel", "must lie outside the data range [0, 2]")
        if self.record_every < 1:
            fail("record_every", "must be at least 1")
        if self.steps < 1:
            fail("epoch", "must cover at least one time step")
        if self.steps % self.record_every:
            fail("record_every", f"must divide the step count {self.steps}")
        for src, key in (("k_source", "k_file"), ("m_source", "m_file")):
            if getattr(self, src) == "file":
                path = getattr(self, key)
                if base_dir and path and not os.path.isabs(path):
                    path = os.path.join(base_dir, path)
                if not path or not os.path.exists(path):
                    fail(key, f"file {getattr(self, key)!r} does not exist")
        return self


_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}
_TYPES.update({"kappa": float, "k_sign": float, "m_sign": float, "param_diffusion": bool})


def _convert(key, raw, lineno):
    typ = _TYPES[key]
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: expected {typ.__name__}, got {raw!r}", lineno, key) from None


def _scan(text):
    values, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key != "preset" and key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}", lineno, key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno, key)
        values[key] = raw if key == "preset" else _convert(key, raw, lineno)
        lines[key] = lineno
    return values, lines


def parse_config(text, base_dir=None, validate=True):
    """Parse ``key = value`` lines; ``#`` starts a comment.

    ``preset = <name>`` loads a named preset first; the other keys in the
    text override it.  Unknown keys, malformed lines, type mismatches and
    invariant violations raise :class:`ConfigError` carrying the offending
    line number.
    """
    values, lines = _scan(text)
    name = values.pop("preset", None)
    if name is not None:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}", lines["preset"], "preset")
        base, _ = _scan(PRESETS[name]["text"])
        values = {**base, **values}
    if base_dir:
        for key in ("k_file", "m_file"):
            if values.get(key) and not os.path.isabs(values[key]):
                values[key] = os.path.join(base_dir, values[key])
    cfg = ScenarioConfig(**values)
    if validate:
        cfg.validate(lines, base_dir)
    return cfg


def _render_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_config(cfg):
    return "".join(f"{f.name} = {_render_value(getattr(cfg, f.name))}\n" for f in fields(cfg))


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


_MIXED = """\
k_source = swirl
m_source = sinusoidal
sin_mc = 0.1
sin_mt = 0.6
sin_mcenter = 64
param_noise = 0.02
"""

# Each preset is desk scale (128x64 cells, dx = 2) unless noted; the full
# 864x288 runs only need nx/ny/epoch overrides.
PRESETS = {
    "fig4": {
        "replicates": "fig4: occluded state synchronization, ~65% cloud cover, true parameters",
        "scale": "128x64, t=3000 (full scale 864x288, t=12000)",
        "text": """\
variant = occluded-sync
kappa = 2.6
cloud_count = 30
cloud_coverage = 0.65
cloud_speed = 0.5
param_noise = 0
epoch = 3000
""",
    },
    "fig5-7": {
        "replicates": "fig5-7: autosynchronization of states and mixed noisy parameters, 25.5% cover",
        "scale": "128x64, t=3000 (full scale 864x288, t=8563)",
        "text": _MIXED + """\
variant = occluded-autosync
kappa = 0.625
s1 = 0.2
s2 = 0.6
cloud_count = 30
cloud_coverage = 0.255
cloud_speed = 2.0
epoch = 3000
""",
    },
    "fig8": {
        "replicates": "fig8: error versus hidden fraction at a fixed epoch",
        "scale": "128x64, t=1200 (full scale t=2400); sweep cloud_coverage",
        "text": _MIXED + """\
variant = occluded-autosync
cloud_coverage = 0.255
cloud_speed = 2.0
epoch = 1200
""",
    },
    "fig9": {
        "replicates": "fig9: error versus observation noise at a fixed epoch, 25.5% cover",
        "scale": "128x64, t=1200 (full scale t=2400); sweep obs_noise",
        "text": _MIXED + """\
variant = occluded-autosync
cloud_coverage = 0.255
cloud_speed = 2.0
epoch = 1200
""",
    },
    "fig10-12": {
        "replicates": "fig10-12: coarse 2x2 sensors with 1-cell gaps, noise and 25.5% cover",
        "scale": "128x64, t=1200 (full scale t=4000); sweep sensor_gap",
        "text": _MIXED + """\
variant = coarse
param_diffusion = true
sensor_w = 2
sensor_h = 2
sensor_gap = 1
cloud_coverage = 0.255
cloud_speed = 2.0
obs_noise = 0.01
epoch = 1200
""",
    },
    "fig13": {
        "replicates": "fig13: error versus cloud speed at a fixed epoch",
        "scale": "128x64, t=1200 (full scale t=2400); sweep cloud_speed",
        "text": _MIXED + """\
variant = occluded-autosync
cloud_coverage = 0.255
cloud_speed = 2.0
epoch = 1200
""",
    },
}


def preset(name):
    """Config text of a named preset (with a provenance comment header)."""
    try:
        p = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return f"# {p['replicates']}\n# scale: {p['scale']}\n" + p["text"]
