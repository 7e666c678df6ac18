"""Absorption spectra of a quantum dot next to a topological-insulator nanosphere.

The localized TI mode (magnetoelectric, dipolar) couples to a two-level dot;
interference through a shared radiative reservoir produces Fano line shapes.
"""
from . import em, kernels, oracle, quantization, spectrum
from .errors import (
    CalibrationError,
    GeometryError,
    OracleFailure,
    OutOfBandError,
    ParameterError,
    PhysicsWarning,
    SingularityError,
    TopoFanoError,
    UnsupportedSectorError,
)
from .model import (
    FINE_STRUCTURE,
    BandLimited,
    Convention,
    Environment,
    HybridConfig,
    Orientation,
    QuantumDot,
    Reservoirs,
    TiMaterial,
    WideBand,
    calibrate_material,
    preset_paper,
)

__version__ = "0.1.0"

__all__ = [
    "em", "kernels", "oracle", "quantization", "spectrum",
    "CalibrationError", "GeometryError", "OracleFailure", "OutOfBandError", "ParameterError",
    "PhysicsWarning", "SingularityError", "TopoFanoError", "UnsupportedSectorError",
    "FINE_STRUCTURE", "BandLimited", "Convention", "Environment", "HybridConfig", "Orientation",
    "QuantumDot", "Reservoirs", "TiMaterial", "WideBand", "calibrate_material", "preset_paper",
    "__version__",
]
