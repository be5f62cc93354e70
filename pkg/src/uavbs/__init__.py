"""On-demand UAV base station placement, channel learning and mobility forecasting."""

from .channel import AtgEnvironment, RadioConfig, PRESETS, preset
from .config import RunConfig, parse_config, load_config
from .errors import (ConfigError, DomainError, InfeasibleError, NotTrainedError, ParseError,
                     UavbsError)
from .placement import Policy

__version__ = "0.1.0"

__all__ = [
    "AtgEnvironment", "RadioConfig", "PRESETS", "preset", "RunConfig", "parse_config",
    "load_config", "ConfigError", "DomainError", "InfeasibleError", "NotTrainedError",
    "ParseError", "UavbsError", "Policy", "__version__",
]
