"""Pseudo-spectral EMHD / Hall-MHD on the torus with dyadic diagnostics."""

from .errors import (
    BlowUpError,
    ConfigError,
    DegenerateFitError,
    ParameterError,
    SnapshotError,
    UndefinedRatioError,
)
from .kernels import BACKEND
from .spectral import Field, TorusGrid

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BlowUpError",
    "ConfigError",
    "DegenerateFitError",
    "Field",
    "ParameterError",
    "SnapshotError",
    "TorusGrid",
    "UndefinedRatioError",
    "__version__",
]
