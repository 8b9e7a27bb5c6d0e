"""Age of information for a two-way SWIPT decode-and-forward relay with short packets."""

from .analytic import AoiReport, GcqSettings, UNBOUNDED, evaluate, evaluate_exact
from .config import ConfigError, SystemConfig, load_config, write_config
from .mcsim import AgeTrace, estimate_success, simulate_aoi

__all__ = [
    "AgeTrace",
    "AoiReport",
    "ConfigError",
    "GcqSettings",
    "SystemConfig",
    "UNBOUNDED",
    "estimate_success",
    "evaluate",
    "evaluate_exact",
    "load_config",
    "simulate_aoi",
    "write_config",
]
