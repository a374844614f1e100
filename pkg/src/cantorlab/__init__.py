"""Extended-precision laboratory for interpolation and smooth extension on
Cantor-type sets."""

from .cantor import CantorParams, LevelData, PointExpr, build_levels
from .numerics import BigReal, LogMag, adaptive_eval, required_bits

__all__ = [
    "BigReal",
    "CantorParams",
    "LevelData",
    "LogMag",
    "PointExpr",
    "adaptive_eval",
    "build_levels",
    "required_bits",
]

__version__ = "0.1.0"
