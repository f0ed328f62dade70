"""Plate-model wheel and sand simulator."""

from .calibrate import (CALIBRATED_SOIL, Calibration, ClimbOutcome, Escapes, SinkageBand,
                        StaticSinkage, Travel, calibrate, default_anchors, load_capacity)
from .contact import Pose, TerrainParams, plate_forces
from .io import plot_sinkage_svg, write_trajectory_csv
from .plates import PlateSet, cylinder_plates, discretize_wheel
from .sim import (ClimbResult, Mode, Trajectory, WheelLoadCase, simulate, slope_climb,
                  static_sinkage, traverse_metrics)
from .wheel import Scenario, load_case, wheel_plates

__all__ = [
    "CALIBRATED_SOIL", "Calibration", "ClimbOutcome", "ClimbResult", "Escapes", "Mode",
    "PlateSet", "Pose", "Scenario", "SinkageBand", "StaticSinkage", "TerrainParams",
    "Trajectory", "Travel", "WheelLoadCase", "calibrate", "cylinder_plates", "default_anchors",
    "discretize_wheel", "load_capacity", "load_case", "plate_forces", "plot_sinkage_svg",
    "simulate", "slope_climb", "static_sinkage", "traverse_metrics", "wheel_plates",
    "write_trajectory_csv",
]
