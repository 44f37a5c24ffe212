"""Bistable optomechanical lattice and the driven Mott-insulator/superfluid transition."""
from .errors import (CutoffError, IntegrationError, InvalidParameterError, NumericalError,
                     OptolatticeError, RangeError, StageError, UnavailableParameterError)
from .params_units import PhysicalParams, SystemParams, fast_mirror, nominal_params, slow_mirror

__version__ = "0.1.0"

__all__ = [
    "CutoffError", "IntegrationError", "InvalidParameterError", "NumericalError",
    "OptolatticeError", "RangeError", "StageError", "UnavailableParameterError",
    "PhysicalParams", "SystemParams", "fast_mirror", "nominal_params", "slow_mirror",
]
