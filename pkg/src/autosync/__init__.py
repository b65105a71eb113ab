"""Observer-based estimation of a partially observed plankton lattice."""
from .config import ConfigError, ScenarioConfig, derive_seed, load_config, parse_config, render_config
from .ecology import BlowUpError, DriveParams, DriveState, drive_step, initial_conditions, simulate_drive
from .estimator import AutosyncObserver
from .field import GridSpec, laplacian_zero_flux
from .metrics import global_relative_error, run_scenario, sweep
from .observer import ObserverConfig, ObserverState, observer_step
from .occlusion import CloudMask, gen_clouds
from .sensing import SensorSpec

__version__ = "0.1.0"

__all__ = [
    "AutosyncObserver",
    "BlowUpError",
    "CloudMask",
    "ConfigError",
    "DriveParams",
    "DriveState",
    "GridSpec",
    "ObserverConfig",
    "ObserverState",
    "ScenarioConfig",
    "SensorSpec",
    "derive_seed",
    "drive_step",
    "gen_clouds",
    "global_relative_error",
    "initial_conditions",
    "laplacian_zero_flux",
    "load_config",
    "observer_step",
    "parse_config",
    "render_config",
    "run_scenario",
    "simulate_drive",
    "sweep",
]
