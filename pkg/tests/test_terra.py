import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from oriwheel.errors import CalibrationFailed, InvalidParams, NeverEscaped
from oriwheel.kinematics import assemble_ring, solve_closure
from oriwheel.pattern import reference_wheel
from oriwheel.terra import (CALIBRATED_SOIL, Pose, TerrainParams, calibrate, load_capacity,
                            plate_forces, wheel_plates)
from oriwheel.terra.calibrate import (ClimbOutcome, SinkageBand, StaticSinkage, Travel, _Plates)
from oriwheel.terra.contact import ContactStep
from oriwheel.terra.io import plot_sinkage_svg, write_trajectory_csv
from oriwheel.terra.plates import cylinder_plates, discretize_wheel, plates_from_triangles
from oriwheel.terra.sim import (COLUMNS, Mode, Trajectory, WheelLoadCase, rest_height,
                                simulate, slope_climb, static_sinkage, traverse_metrics)
from oriwheel.terra.wheel import load_case

SOIL = CALIBRATED_SOIL
WIDTHS = (22.0, 38.0, 72.0)


@pytest.fixture(scope="module")
def ref_mesh():
    cfg = reference_wheel()
    return assemble_ring(cfg, solve_closure(cfg))


@pytest.fixture(scope="module")
def plates_by_width():
    return {w: wheel_plates(w) for w in WIDTHS}


def _tri_area(t):
    return 0.5 * np.linalg.norm(np.cross(t[1] - t[0], t[2] - t[0]))


# Plates.

def test_plate_area_equals_mesh_area(ref_mesh):
    verts, tris = ref_mesh.merged()
    mesh_area = sum(_tri_area(verts[t]) for t in tris)
    assert discretize_wheel(ref_mesh, 8.0).total_area == pytest.approx(mesh_area, rel=1e-12)


def test_plate_normals_and_areas(ref_mesh):
    p = discretize_wheel(ref_mesh, 4.0)
    np.testing.assert_allclose(np.linalg.norm(p.normals, axis=1), 1.0, atol=1e-12)
    assert np.all(p.areas > 0)


def test_refinement_keeps_total_area(ref_mesh):
    a = discretize_wheel(ref_mesh, 8.0)
    b = discretize_wheel(ref_mesh, 4.0)
    assert len(b) > len(a)
    assert abs(b.total_area - a.total_area) < 1e-9 * a.total_area


def test_role_labels_match_mesh_facets(ref_mesh):
    p = discretize_wheel(ref_mesh, 8.0)
    roles = {r for r, _ in ref_mesh.triangles}
    assert set(p.roles) == roles == {"S1", "S2", "S3", "S4", "S5", "S6"}
    verts = ref_mesh.cells.reshape(-1, ref_mesh.cells.shape[2], 3)
    for role in roles:
        idx = [t for r, t in ref_mesh.triangles if r == role]
        area = sum(_tri_area(c[list(t)]) for c in verts for t in idx)
        assert p.areas[p.roles == role].sum() == pytest.approx(area, rel=1e-12)


def test_bad_resolution():
    with pytest.raises(ValueError):
        plates_from_triangles(np.zeros((1, 3, 3)), ["S1"], 0.0)


# Contact forces.

def test_no_force_above_surface(plates_by_width):
    p = plates_by_width[38.0]
    force, torque = plate_forces(p, Pose(0.0, 500.0, 0.3), (10.0, -5.0), 6.28, SOIL)
    assert np.all(force == 0) and torque == 0


def test_horizontal_square_bearing():
    square = np.array([[[0, -5, 0], [10, -5, 0], [10, 5, 0]],
                       [[0, -5, 0], [10, 5, 0], [0, 5, 0]]], float)
    # Plate frame: x lateral, (y, z) rolling plane; lift the square below the axle.
    square[..., 2] -= 20.0
    p = plates_from_triangles(square, ["S1", "S1"], 100.0)
    soil = TerrainParams(k_sink=2e-4, mu=0.3)
    depth = 3.0
    force, _ = plate_forces(p, Pose(0.0, 20.0 - depth, 0.0), (0.0, 0.0), 0.0, soil)
    np.testing.assert_allclose(force, [0.0, 0.0, soil.k_sink * depth * 100.0], atol=1e-15)


def _thrust(plates, omega, depth):
    force, _ = plate_forces(plates, Pose(0.0, rest_height(plates, depth), 0.0), (0.0, 0.0),
                            omega, SOIL)
    return math.copysign(1.0, omega) * force[0]


def test_cylinder_thrust_direction_symmetric():
    cyl = cylinder_plates(40.0, 40.0)
    for depth in (5.0, 15.0, 25.0):
        a, b = _thrust(cyl, 6.28, depth), _thrust(cyl, -6.28, depth)
        assert a > 0
        assert abs(a - b) <= 1e-9 * abs(a)


def test_origami_thrust_direction_asymmetric(ref_mesh):
    p = discretize_wheel(ref_mesh, 8.0).mirrored()
    depth = static_sinkage(p, load_case(p).load, SOIL)
    push, dig = _thrust(p, 6.28, depth), _thrust(p, -6.28, depth)
    assert abs(push - dig) / max(abs(push), abs(dig)) > 0.05


# Time stepping.

def test_cylinder_settles_to_static_sinkage():
    cyl = cylinder_plates(40.0, 40.0)
    case = WheelLoadCase(cyl, 3.3, 0.0, 337.0)
    duration = 3.0
    traj = simulate(case, SOIL, duration)
    z_static = static_sinkage(cyl, case.load, SOIL)
    assert z_static == pytest.approx(14.3277, abs=1e-4)
    # A loaded plate at rest creeps no faster than the kink speed.
    assert abs(traj.z[-1] - z_static) <= ContactStep.KINK * duration
    assert abs(traj.x[-1]) < 1e-9
    assert abs(traj.samples[-1, 3]) < 1e-6


def test_energy_non_increasing_without_spin():
    cyl = cylinder_plates(40.0, 40.0)
    mass, load = 337.0, 3.3
    traj = simulate(WheelLoadCase(cyl, load, 0.0, mass), SOIL, 1.0)
    z, vx, vz = traj.z, traj.samples[:, 3], traj.samples[:, 4]
    # Stored soil energy: work of the vertical bearing force from the surface.
    cz, nz = cyl.centroids[:, 2], cyl.normals[:, 2]
    lowest = cyl.vertices[:, 2].min()
    grid = np.linspace(0.0, z.max() + 1.0, 8001)
    support = []
    for s in grid:
        d = s - (cz - lowest)
        m = d > 0
        support.append(np.sum(SOIL.k_sink * d[m] * cyl.areas[m] * -nz[m]))
    support = np.array(support)
    stored = np.concatenate([[0.0], np.cumsum(0.5 * (support[1:] + support[:-1]) * np.diff(grid))])
    energy = 0.5 * mass * 1e-6 * (vx ** 2 + vz ** 2) - load * z + np.interp(z, grid, stored)
    assert np.max(np.diff(energy)) <= 1e-6 * np.abs(energy).max()


def test_deterministic(plates_by_width):
    case = load_case(plates_by_width[38.0])
    a = simulate(case, SOIL, 1.0, start_sink=30.0)
    b = simulate(case, SOIL, 1.0, start_sink=30.0)
    assert a.samples.tobytes() == b.samples.tobytes()


def test_time_step_convergence(plates_by_width):
    case = load_case(plates_by_width[72.0])
    a = simulate(case, SOIL, 2.0, dt=1e-3, start_sink=30.0)
    b = simulate(case, SOIL, 2.0, dt=5e-4, start_sink=30.0)
    assert abs(a.x[-1] - b.x[-1]) < 0.01 * abs(b.x[-1])
    assert abs(a.z[-1] - b.z[-1]) < 0.01 * abs(b.z[-1])


@pytest.mark.parametrize("dt", [0.0, 2.5e-3, -1e-3])
def test_dt_limit(plates_by_width, dt):
    with pytest.raises(InvalidParams):
        simulate(load_case(plates_by_width[38.0]), SOIL, 1.0, dt=dt)


def test_mode_follows_spin(plates_by_width):
    p = plates_by_width[38.0]
    assert simulate(load_case(p, 6.28), SOIL, 0.01).mode is Mode.SAND_PUSHING
    assert simulate(load_case(p, -6.28), SOIL, 0.01).mode is Mode.SAND_DIGGING


def test_static_sinkage_decreases_with_width(plates_by_width):
    load = load_case(plates_by_width[22.0]).load
    depths = [static_sinkage(plates_by_width[w], load, SOIL) for w in WIDTHS]
    assert depths[0] > depths[1] > depths[2]


def test_cylinder_static_sinkage_decreases_with_width():
    depths = [static_sinkage(cylinder_plates(40.0, w), 3.3, SOIL) for w in (10, 20, 40, 80)]
    assert all(a > b for a, b in zip(depths, depths[1:]))


# Metrics.

def _synthetic(x, z, dt=0.01):
    t = np.arange(len(x)) * dt
    zeros = np.zeros_like(t)
    return Trajectory(np.column_stack([t, x, z, zeros, zeros, zeros, zeros]), dt,
                      Mode.SAND_PUSHING)


def test_never_escaped_carries_distance():
    traj = _synthetic(np.linspace(0, 40, 1001), np.full(1001, 30.0))
    with pytest.raises(NeverEscaped) as info:
        traverse_metrics(traj, start_sink=30.0, window=8.0)
    assert info.value.t_pt == math.inf
    assert info.value.d_pt == pytest.approx(40 * 8 / 10)


def test_constant_velocity_distance():
    v = 12.5
    t = np.arange(1001) * 0.01
    traj = _synthetic(v * t, np.linspace(30, 0, 1001))
    t_pt, d_pt = traverse_metrics(traj, start_sink=30.0, window=8.0)
    assert d_pt == pytest.approx(v * 8.0, rel=1e-12)
    assert t_pt == pytest.approx(1.01, abs=0.011)


def test_metric_window_too_long():
    with pytest.raises(InvalidParams):
        traverse_metrics(_synthetic(np.zeros(10), np.zeros(10)), window=8.0)


def test_level_ground_climb_passes(plates_by_width):
    res = slope_climb(load_case(plates_by_width[38.0]), SOIL, 100.0)
    assert res.passed and res.reason == "reached length"


def test_slope_pass_monotone_in_width():
    soil = SOIL.with_(slope=math.radians(17.0))
    outcomes = [slope_climb(load_case(wheel_plates(w)), soil, 300.0, budget=10.0).passed
                for w in (22.0, 30.0, 38.0, 55.0, 72.0)]
    assert outcomes[0] is False and outcomes[-1] is True
    first = outcomes.index(True)
    assert all(outcomes[first:])


def test_slope_out_of_range(plates_by_width):
    with pytest.raises(InvalidParams):
        slope_climb(load_case(plates_by_width[38.0]), SOIL.with_(slope=math.radians(50)), 100.0)


def test_band_on_slope_for_wide_wheel(plates_by_width):
    observed, margin = SinkageBand(width=72.0).measure(SOIL, _Plates(None, 8.0))
    zmin, zmax = observed
    assert 5.0 <= zmin and zmax <= 15.0
    assert margin >= 0


def test_load_capacity_grows_with_width():
    narrow = load_capacity(SOIL, 22.0)
    wide = load_capacity(SOIL, 72.0)
    assert wide > narrow >= 0


def test_no_capacity_on_soft_soil():
    assert load_capacity(SOIL.with_(k_sink=1e-6), 38.0, budget=2.0) == 0.0


# Calibration.

def test_contradictory_anchors():
    with pytest.raises(CalibrationFailed):
        calibrate([ClimbOutcome(38.0, True), ClimbOutcome(38.0, False)])


def test_empty_anchor_set():
    with pytest.raises(InvalidParams):
        calibrate([])


def test_unsatisfiable_anchor():
    with pytest.raises(CalibrationFailed):
        calibrate([SinkageBand(width=72.0, lo=100.0, hi=110.0)], k_grid=(1e-4, 2e-4),
                  max_refine=0)


def test_round_trip_recovers_synthetic_soil():
    truth = SOIL.with_(k_sink=1.1e-4, mu=0.27)
    plates = _Plates(None, 8.0)
    travel = dict(duration=1.0, slope_deg=10.0)
    sink = StaticSinkage(38.0, 1.0).measure(truth, plates)[0]
    dist = Travel(38.0, 1.0, **travel).measure(truth, plates)[0]
    cal = calibrate([StaticSinkage(38.0, sink), Travel(38.0, dist, **travel)],
                    k_grid=np.geomspace(6e-5, 3e-4, 5), mu_grid=(0.15, 0.25, 0.35),
                    max_refine=60)
    assert cal.terrain.k_sink == pytest.approx(truth.k_sink, rel=0.05)
    assert cal.terrain.mu == pytest.approx(truth.mu, rel=0.05)


def test_default_calibration_reproduces_frozen_soil(default_calibration):
    assert default_calibration.terrain == CALIBRATED_SOIL
    assert all(ok for *_, ok in default_calibration.report)
    assert "ok" in default_calibration.table()


# Output files.

def test_trajectory_csv(tmp_path, plates_by_width):
    traj = simulate(load_case(plates_by_width[38.0]), SOIL, 0.05, start_sink=30.0)
    path = write_trajectory_csv(traj, tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_allclose(data, traj.samples, rtol=1e-8, atol=1e-12)


def test_sinkage_svg(tmp_path, plates_by_width):
    traj = simulate(load_case(plates_by_width[38.0]), SOIL, 0.05, start_sink=30.0)
    path = plot_sinkage_svg({"w38": traj, "w38b": traj}, tmp_path / "s.svg")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    assert len(root.findall(".//{http://www.w3.org/2000/svg}polyline")) == 2
