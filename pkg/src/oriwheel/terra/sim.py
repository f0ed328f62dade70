"""Single-wheel locomotion on sand: time stepping and derived metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..errors import InvalidParams, NeverEscaped, NumericalDivergence
from .contact import ContactStep, Pose, TerrainParams, lowest_point

MAX_DT = 2e-3
COLUMNS = ("t_s", "x_mm", "z_mm", "vx_mm_s", "vz_mm_s", "thrust_N", "normal_N")


class Mode(str, Enum):
    SAND_PUSHING = "SandPushing"
    SAND_DIGGING = "SandDigging"


def mode_for(omega: float) -> Mode:
    """Rotation sense to mechanism: plates are mounted so omega > 0 pushes sand."""
    return Mode.SAND_PUSHING if omega >= 0 else Mode.SAND_DIGGING


@dataclass(frozen=True)
class WheelLoadCase:
    """One wheel: its plates, vertical load (N), prescribed spin (rad/s), mass (g)."""

    plates: object
    load: float
    omega: float
    mass: float

    def __post_init__(self):
        if not (self.load > 0 and self.mass > 0):
            raise InvalidParams("load and mass must be positive")
        if not math.isfinite(self.omega):
            raise InvalidParams("omega must be finite")


@dataclass
class Trajectory:
    samples: np.ndarray  # (N, 7) columns as COLUMNS
    dt: float
    mode: Mode
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.samples[:, COLUMNS.index(name)]

    @property
    def t(self):
        return self.column("t_s")

    @property
    def x(self):
        return self.column("x_mm")

    @property
    def z(self):
        return self.column("z_mm")

    def to_csv(self) -> str:
        rows = [",".join(COLUMNS)]
        rows += [",".join(f"{v:.9g}" for v in row) for row in self.samples]
        return "\n".join(rows) + "\n"


def rest_height(plates, sink: float) -> float:
    """Axle height that puts the lowest hull point ``sink`` mm below the surface."""
    return -sink - lowest_point(plates, Pose(0.0, 0.0, 0.0))


def simulate(case: WheelLoadCase, terrain: TerrainParams, duration: float, dt: float = 1e-3,
             start_sink: float = 0.0, v0=(0.0, 0.0), stop=None) -> Trajectory:
    """March (x, z, vx, vz) with an implicit contact step and symplectic position update.

    The load acts straight down in the gravity frame, so on a slope it has a
    component -load*sin(slope) along the ground. ``stop(sample)`` may end the
    run early by returning True.
    """
    if not 0 < dt <= MAX_DT:
        raise InvalidParams(f"dt must lie in (0, {MAX_DT}] s")
    if not duration > 0:
        raise InvalidParams("duration must be positive")
    plates = case.plates
    solver = ContactStep(terrain, case.mass, plates)
    accel = case.load * 1e6 / case.mass
    a_ext = np.array([-accel * math.sin(terrain.slope), -accel * math.cos(terrain.slope)])
    pos = np.array([0.0, rest_height(plates, start_sink)])
    vel = np.array(v0, float)
    phi = 0.0
    steps = int(round(duration / dt))
    out = np.empty((steps + 1, len(COLUMNS)))
    sign = 1.0 if case.omega >= 0 else -1.0

    def sink_depth(p, ang):
        return max(0.0, -lowest_point(plates, Pose(p[0], p[1], ang)))

    out[0] = (0.0, pos[0], sink_depth(pos, phi), vel[0], vel[1], 0.0, 0.0)
    n_done = 0
    for i in range(1, steps + 1):
        v_free = vel + dt * a_ext
        vel_new, force, _ = solver.step(Pose(pos[0], pos[1], phi), case.omega, v_free, vel, dt)
        pos = pos + dt * vel_new
        vel = vel_new
        phi += case.omega * dt
        row = (i * dt, pos[0], sink_depth(pos, phi), vel[0], vel[1], sign * force[0], force[2])
        if not all(math.isfinite(v) for v in row):
            traj = Trajectory(out[:i].copy(), dt, mode_for(case.omega))
            raise NumericalDivergence(f"non-finite state at t={i * dt:.4g} s", traj)
        out[i] = row
        n_done = i
        if stop is not None and stop(out[i]):
            break
    return Trajectory(out[: n_done + 1].copy(), dt, mode_for(case.omega))


ESCAPE_FRACTION = 0.9


def traverse_metrics(traj: Trajectory, start_sink: float = 30.0, window: float = 8.0,
                     escape_depth: float | None = None) -> tuple:
    """(t_pt, d_pt): first time sinkage falls below the escape depth, and travel at ``window``.

    The escape depth defaults to 90 % of the initial sinkage, i.e. the wheel
    has climbed a tenth of the way out. Raises NeverEscaped (t_pt = inf,
    d_pt attached) when the wheel never rises that far.
    """
    t, x, z = traj.t, traj.x, traj.z
    if t[-1] + 1e-12 < window:
        raise InvalidParams("trajectory shorter than the metric window")
    d_pt = float(np.interp(window, t, x) - x[0])
    thr = ESCAPE_FRACTION * start_sink if escape_depth is None else escape_depth
    below = np.flatnonzero(z < thr)
    if below.size == 0:
        raise NeverEscaped(f"sinkage never fell below {thr:g} mm", d_pt)
    return float(t[below[0]]), d_pt


@dataclass(frozen=True)
class ClimbResult:
    passed: bool
    reason: str
    trajectory: Trajectory


def slope_climb(case: WheelLoadCase, terrain: TerrainParams, length: float,
                clearance: float = 30.0, budget: float = 20.0, dt: float = 1e-3,
                start_sink: float | None = None) -> ClimbResult:
    """Pass iff the wheel covers ``length`` before sinking past ``clearance`` or timing out.

    The wheel starts at rest at its static sinkage on the slope unless
    ``start_sink`` is given.
    """
    if not 0 <= terrain.slope < math.pi / 4:
        raise InvalidParams("slope must lie in [0, pi/4)")
    if not length > 0:
        raise InvalidParams("length must be positive")
    if start_sink is None:
        try:
            start_sink = static_sinkage(case.plates, case.load, terrain)
        except InvalidParams:
            start_sink = math.inf
    state = {"why": "time budget exhausted"}

    def stop(row):
        if row[1] >= length:
            state["why"] = "reached length"
            return True
        if row[2] > clearance:
            state["why"] = "chassis contact"
            return True
        return False

    if start_sink > clearance:
        # The frame already rests on the sand before the wheel turns.
        traj = simulate(case, terrain, dt, dt, start_sink=clearance)
        return ClimbResult(False, "chassis contact", traj)
    traj = simulate(case, terrain, budget, dt, start_sink=start_sink, stop=stop)
    return ClimbResult(state["why"] == "reached length", state["why"], traj)


def static_sinkage(plates, load: float, terrain: TerrainParams, tol: float = 1e-9) -> float:
    """Depth of the lowest point where plate bearing balances the load, by bisection.

    Every submerged plate is taken as engaged at rest; the bearing force along
    the surface normal is monotone in depth, so bisection is exact.
    """
    z_bottom = lowest_point(plates, Pose(0.0, 0.0, 0.0))
    cz = plates.centroids[:, 2]
    nz = plates.normals[:, 2]
    w_n = load * math.cos(terrain.slope)

    def support(sink):
        d = -(cz - z_bottom - sink)
        m = d > 0
        return float(np.sum(terrain.k_sink * d[m] ** terrain.n_exp * plates.areas[m] * -nz[m]))

    hi = 1.0
    while support(hi) < w_n:
        hi *= 2.0
        if hi > 1e6:
            raise InvalidParams("soil cannot carry this load")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if support(mid) < w_n:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
