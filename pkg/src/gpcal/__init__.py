"""gpcal: hot-wire anemometer calibration with exact GP regression."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    GpcalError,
    InputError,
    NumericalError,
    ParseError,
    SchemaError,
)
from .kernels import FAMILIES, Kernel

__all__ = [
    "ConfigError",
    "FAMILIES",
    "GpcalError",
    "InputError",
    "Kernel",
    "NumericalError",
    "ParseError",
    "SchemaError",
    "__version__",
]
