"""Weak-pulse propagation through a dense three-level EIT medium.

Includes the Lorentz-Lorenz local-field correction and radiation trapping.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .config import (ConfigError, DerivedRates, SystemConfig, derive_rates, load_config,
                     load_preset, validate_config)

__all__ = ["ConfigError", "DerivedRates", "SystemConfig", "derive_rates", "load_config",
           "load_preset", "validate_config", "__version__"]
