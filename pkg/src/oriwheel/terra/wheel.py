"""Standard single-wheel scenarios: plates at a given width and the per-wheel load share."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..analytics import theta_for_width
from ..errors import InvalidParams
from ..kinematics import assemble_ring
from ..pattern import WheelConfig, reference_wheel
from .contact import TerrainParams
from .plates import PlateSet, discretize_wheel
from .sim import WheelLoadCase

ROBOT_MASS_G = 1348.5
WHEELS = 4
OMEGA = 6.28  # rad/s
SLOPE = math.radians(17.0)
CLEARANCE = 30.0  # mm, chassis to the lowest point of the wheel
START_SINK = 30.0
RESOLUTION = 8.0  # mm, longest plate edge


def wheel_plates(width: float, config: WheelConfig | None = None,
                 resolution: float = RESOLUTION) -> PlateSet:
    """Plates of the wheel folded to ``width``, mounted so omega > 0 pushes sand.

    The folded sheet is mirrored in the rolling plane: its V-grooves then
    lead with their closed side when the wheel turns forward.
    """
    config = reference_wheel() if config is None else config
    theta = theta_for_width(config.n_width, config.cell.b, width)
    lo, hi = config.theta_range
    if not lo - 1e-12 <= theta <= hi + 1e-12:
        raise InvalidParams(f"width {width} mm outside the actuated range")
    return discretize_wheel(assemble_ring(config, theta), resolution).mirrored()


def load_case(plates: PlateSet, omega: float = OMEGA, added_g: float = 0.0,
              robot_mass_g: float = ROBOT_MASS_G) -> WheelLoadCase:
    """One of four wheels carrying a quarter of the robot plus any added mass."""
    if added_g < 0:
        raise InvalidParams("added mass must be >= 0")
    share = (robot_mass_g + added_g) / WHEELS
    return WheelLoadCase(plates, share * 9.81e-3, omega, share)


@dataclass(frozen=True)
class Scenario:
    """Declarative single-wheel run, as read from a config file."""

    name: str
    width: float
    kind: str = "traverse"  # traverse | climb
    omega: float = OMEGA
    slope_deg: float = 0.0
    duration: float = 8.0
    start_sink: float = START_SINK
    length: float = 300.0
    added_g: float = 0.0

    def __post_init__(self):
        if self.kind not in ("traverse", "climb"):
            raise InvalidParams(f"scenario kind must be traverse or climb, got {self.kind!r}")
        if not (self.width > 0 and self.duration > 0 and self.length > 0):
            raise InvalidParams("width, duration and length must be positive")

    def terrain(self, soil: TerrainParams) -> TerrainParams:
        return soil.with_(slope=math.radians(self.slope_deg))
