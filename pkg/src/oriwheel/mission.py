"""Robot-level behaviour: width actuation, channel sensing and the pass/fold/return machine.

The robot carries two wheels, so its overall width is ``frame_const + 2*l_b``.
Timing is kinematic by default: folding moves the fold angle at
``fold_rate`` and driving moves at a constant speed. Given a soil, the drive
through the channel is instead timed by the single-wheel sand simulator.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .analytics import theta_for_width, wheel_width
from .errors import InvalidParams
from .pattern import WheelConfig, reference_wheel

# Chassis constant consistent with both overall robot widths (247 and 347 mm).
DEFAULT_FRAME_CONST = 203.0
ROBOT_MASS_G = 1348.5


@dataclass(frozen=True)
class RobotSpec:
    wheel: WheelConfig
    frame_const: float = DEFAULT_FRAME_CONST
    mass: float = ROBOT_MASS_G
    fold_rate: float = 0.5  # rad/s
    safety_margin: float = 5.0
    initial_theta: float | None = None  # defaults to the widest state

    def __post_init__(self):
        for name in ("frame_const", "mass", "fold_rate"):
            v = getattr(self, name)
            if not (isinstance(v, numbers.Real) and math.isfinite(v) and v > 0):
                raise InvalidParams(f"{name} must be a positive number")
        if not (isinstance(self.safety_margin, numbers.Real) and self.safety_margin >= 0):
            raise InvalidParams("safety_margin must be >= 0")
        lo, hi = self.wheel.theta_range
        if self.initial_theta is None:
            object.__setattr__(self, "initial_theta", hi)
        elif not lo <= self.initial_theta <= hi:
            raise InvalidParams("initial_theta must lie in theta_range")

    @property
    def width_range(self) -> tuple:
        lo, hi = self.wheel.theta_range
        return robot_width(self, lo), robot_width(self, hi)


def robot_width(spec: RobotSpec, theta1: float) -> float:
    """Overall robot width (mm) with both wheels at fold angle ``theta1``."""
    lo, hi = spec.wheel.theta_range
    if not lo - 1e-12 <= theta1 <= hi + 1e-12:
        raise InvalidParams(f"theta1={theta1:.6g} outside theta_range [{lo:.6g}, {hi:.6g}]")
    cfg = spec.wheel
    return spec.frame_const + 2.0 * wheel_width(cfg.n_width, cfg.cell.b, theta1)


@dataclass(frozen=True)
class ChannelScenario:
    channel_width: float
    sensor_sigma: float = 0.0
    n_readings: int = 9
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.channel_width, numbers.Real) and self.channel_width > 0):
            raise InvalidParams("channel_width must be positive")
        if not (isinstance(self.sensor_sigma, numbers.Real) and self.sensor_sigma >= 0):
            raise InvalidParams("sensor_sigma must be >= 0")
        n = self.n_readings
        if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n < 1 or n % 2 == 0:
            raise InvalidParams("n_readings must be a positive odd integer")
        if isinstance(self.seed, bool) or not isinstance(self.seed, numbers.Integral):
            raise InvalidParams("seed must be an integer")


def sense_channel(scenario: ChannelScenario) -> float:
    """Median of seeded Gaussian range readings."""
    if scenario.sensor_sigma == 0:
        return float(scenario.channel_width)
    rng = np.random.default_rng(scenario.seed)
    draws = rng.normal(scenario.channel_width, scenario.sensor_sigma, scenario.n_readings)
    return float(np.median(draws))


class Decision(str, Enum):
    DIRECT_PASS = "DirectPass"
    FOLD_AND_PASS = "FoldAndPass"
    RETURN = "Return"


def decide(spec: RobotSpec, measured: float) -> Decision:
    if not measured > 0:
        raise InvalidParams("measured width must be positive")
    w_min, w_max = spec.width_range
    if measured >= w_max + spec.safety_margin:
        return Decision.DIRECT_PASS
    if measured < w_min + spec.safety_margin:
        return Decision.RETURN
    return Decision.FOLD_AND_PASS


class State(str, Enum):
    INITIAL = "Initial"
    SENSING = "Sensing"
    FOLDING = "Folding"
    THROUGH = "Through"
    UNFOLDING = "Unfolding"
    RETURNING = "Returning"
    DONE = "Done"


@dataclass(frozen=True)
class Event:
    t: float
    state: State
    width: float  # overall robot width, mm
    theta: float

    def to_dict(self) -> dict:
        return {"t": self.t, "state": self.state.value, "width_mm": self.width}


@dataclass
class MissionTrace:
    decision: Decision
    measured: float
    events: list = field(default_factory=list)
    actuation_limited: bool = False
    stalled: bool = False  # sand drive did not reach the channel end

    def states(self) -> list:
        return [e.state for e in self.events]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.events)


def _sand_drive(spec: RobotSpec, theta: float, length: float, terrain, budget: float):
    """Time (s) for one wheel at ``theta`` to cover ``length`` on sand, or None."""
    from .terra.sim import simulate, static_sinkage
    from .terra.wheel import load_case, wheel_plates

    cfg = spec.wheel
    plates = wheel_plates(wheel_width(cfg.n_width, cfg.cell.b, theta), cfg)
    case = load_case(plates, robot_mass_g=spec.mass)
    start = static_sinkage(plates, case.load, terrain)
    traj = simulate(case, terrain, budget, start_sink=start, stop=lambda row: row[1] >= length)
    return float(traj.t[-1]) if traj.x[-1] >= length else None


def run_mission(spec: RobotSpec, scenario: ChannelScenario, channel_length: float = 500.0,
                speed: float = 100.0, terrain=None, sand_budget: float = 30.0) -> MissionTrace:
    """Sense, decide and act; folds only as far as the channel requires.

    With ``terrain`` the Through phase lasts as long as the simulated wheel
    needs to cover the channel; if it stalls within ``sand_budget`` seconds
    the robot backs out and the trace ends Returning, Done.
    """
    if not (channel_length > 0 and speed > 0):
        raise InvalidParams("channel_length and speed must be positive")
    theta0 = spec.initial_theta
    w0 = robot_width(spec, theta0)
    measured = sense_channel(scenario)
    decision = decide(spec, measured)
    trace = MissionTrace(decision, measured)
    ev = trace.events
    ev.append(Event(0.0, State.INITIAL, w0, theta0))
    ev.append(Event(0.0, State.SENSING, w0, theta0))
    t = 0.0

    def drive(theta):
        if terrain is None:
            return channel_length / speed
        took = _sand_drive(spec, theta, channel_length, terrain, sand_budget)
        if took is None:
            trace.stalled = True
            return sand_budget
        return took

    if decision is Decision.FOLD_AND_PASS:
        cfg = spec.wheel
        lb_need = 0.5 * (measured - spec.safety_margin - spec.frame_const)
        theta_need = theta_for_width(cfg.n_width, cfg.cell.b, min(lb_need, wheel_width(
            cfg.n_width, cfg.cell.b, theta0)))
        if theta_need < cfg.theta_range[0] - 1e-12:
            trace.actuation_limited = True
            trace.decision = Decision.RETURN
        else:
            theta = min(theta0, max(theta_need, cfg.theta_range[0]))
            ev.append(Event(t, State.FOLDING, w0, theta0))
            t += (theta0 - theta) / spec.fold_rate
            w = robot_width(spec, theta)
            ev.append(Event(t, State.THROUGH, w, theta))
            t += drive(theta)
            if trace.stalled:
                ev.append(Event(t, State.RETURNING, w, theta))
                ev.append(Event(t, State.DONE, w, theta))
                return trace
            ev.append(Event(t, State.UNFOLDING, w, theta))
            t += (theta0 - theta) / spec.fold_rate
            ev.append(Event(t, State.DONE, w0, theta0))
            return trace
    if trace.decision is Decision.DIRECT_PASS:
        ev.append(Event(t, State.THROUGH, w0, theta0))
        t += drive(theta0)
        if trace.stalled:
            ev.append(Event(t, State.RETURNING, w0, theta0))
        ev.append(Event(t, State.DONE, w0, theta0))
        return trace
    # Return: turn back without entering the channel.
    ev.append(Event(t, State.RETURNING, w0, theta0))
    ev.append(Event(t, State.DONE, w0, theta0))
    return trace


def reference_spec(**kw) -> RobotSpec:
    """Robot on the reference wheel (widths 22 to 72 mm)."""
    return RobotSpec(wheel=reference_wheel(), **kw)
