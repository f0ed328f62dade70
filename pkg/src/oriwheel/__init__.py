"""Variable-width origami wheel toolkit.

Subpackages and modules: ``pattern`` (crease patterns), ``kinematics`` (rigid
folding), ``analytics`` (closed forms), ``design_search``, ``terra`` (sand
locomotion), ``mission`` (channel passing) and ``cli``.
"""

from .errors import (ActuationLimit, CalibrationFailed, FoldInfeasible, Infeasible, InvalidParams,
                     IoError, NeverEscaped, NoClosure, NoFeasibleDesign, NumericalDivergence,
                     OriWheelError, Unconverged)
from .pattern import CellParams, WheelConfig, reference_wheel

__version__ = "0.1.0"

__all__ = [
    "ActuationLimit", "CalibrationFailed", "CellParams", "FoldInfeasible", "Infeasible",
    "InvalidParams", "IoError", "NeverEscaped", "NoClosure", "NoFeasibleDesign",
    "NumericalDivergence", "OriWheelError", "Unconverged", "WheelConfig", "reference_wheel",
]
