"""Probe transmission, slow light, and mean-field dynamics of a SAW-driven
DBR optomechanical cavity."""

from .config import ConfigError, RunConfig, load_config, load_preset
from .params import (CavityParams, DerivedQuantities, DeviceConfig,
                     DriveParams, MaterialStack, MechanicalParams, ModelParams,
                     build_model, derive_quantities, rf_power_bounds,
                     validate_regime)
from .response import (SweepSpec, evaluate_spectrum, output_quadrature,
                       resolve_detuning, sweep, window_width)
from .steady_state import SteadyState, lock_pump_detuning, solve_steady_state

__version__ = "0.1.0"

__all__ = [
    "CavityParams", "ConfigError", "DerivedQuantities", "DeviceConfig",
    "DriveParams", "MaterialStack", "MechanicalParams", "ModelParams",
    "RunConfig", "SteadyState", "SweepSpec", "build_model",
    "derive_quantities", "evaluate_spectrum", "load_config", "load_preset",
    "lock_pump_detuning", "output_quadrature", "resolve_detuning",
    "rf_power_bounds", "solve_steady_state", "sweep", "validate_regime",
    "window_width", "__version__",
]
