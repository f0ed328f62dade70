import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fold_oracle import constraint_fold
from oriwheel.analytics import closure_fold_angle, wheel_width
from oriwheel.errors import FoldInfeasible, IoError, NoClosure
from oriwheel.kinematics import (SEAM_PAIRS, VID, assemble_ring, cell_edge_pairs, export_mesh,
                                 fold_cell, measure_radius, measure_width, outer_radius,
                                 solve_closure)
from oriwheel.pattern import (CELL_FACETS, CellParams, WheelConfig, cell_local_vertices,
                              reference_wheel)
from strategies import closable, valid_cells

REF = CellParams(l_t=10.0, l_u=30.0, b=18.0, beta=math.radians(15.0))
# Closure angle of the reference ring, frozen from the closed form and the solver.
THETA_REF = 1.7346034306364755


def _edge_lengths(points, cell):
    return np.array([np.linalg.norm(points[p] - points[q]) for p, q in cell_edge_pairs()])


def test_flat_state_lies_in_plane():
    folded = fold_cell(REF, math.pi)
    np.testing.assert_allclose(folded.vertices[:, 2], 0.0, atol=1e-12)
    np.testing.assert_allclose(folded.vertices[:, :2], cell_local_vertices(REF), atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(valid_cells(), st.floats(0.0, math.pi))
def test_fold_is_isometric_and_facets_planar(cell, theta):
    folded = fold_cell(cell, theta).vertices
    flat = np.column_stack([cell_local_vertices(cell), np.zeros(17)])
    lf, lo = _edge_lengths(folded, cell), _edge_lengths(flat, cell)
    assert np.max(np.abs(lf - lo) / lo) <= 1e-9
    for _, names in CELL_FACETS:
        pts = folded[[VID[n] for n in names]]
        centred = pts - pts.mean(axis=0)
        normal = np.linalg.svd(centred)[2][-1]
        assert np.max(np.abs(centred @ normal)) <= 1e-9 * cell.a
        # Rigid facets keep every internal distance, not only the edges.
        for a, b in combinations([VID[n] for n in names], 2):
            d0 = np.linalg.norm(flat[a] - flat[b])
            assert abs(np.linalg.norm(folded[a] - folded[b]) - d0) <= 1e-9 * cell.a


def test_fold_matches_constraint_solver_at_sixty_degrees():
    got = fold_cell(REF, math.radians(60)).vertices
    np.testing.assert_allclose(got, constraint_fold(REF, math.radians(60)), atol=1e-6)


def _oracle_cases(count=6, seed=7):
    # Below about 5 degrees the fold leaves the flat state too abruptly for
    # the continuation to follow, so the sample stays above 8 degrees.
    rng = np.random.default_rng(seed)
    for _ in range(count):
        b = rng.uniform(2.0, 60.0)
        beta = rng.uniform(math.radians(8), math.radians(60))
        l_t = b * math.tan(beta) * rng.uniform(1.05, 4.0)
        yield CellParams(l_t, l_t * rng.uniform(1.1, 5.0), b, beta), rng.uniform(0.3, 2.9)


@pytest.mark.parametrize("cell,theta", list(_oracle_cases()))
def test_fold_matches_constraint_solver_random(cell, theta):
    np.testing.assert_allclose(fold_cell(cell, theta).vertices,
                               constraint_fold(cell, theta), atol=1e-6)


@pytest.mark.parametrize("theta", [-0.1, math.pi + 0.1, float("nan")])
def test_fold_outside_range_rejected(theta):
    with pytest.raises(FoldInfeasible):
        fold_cell(REF, theta)


def test_reference_closure_angle():
    theta = solve_closure(reference_wheel())
    assert theta == pytest.approx(THETA_REF, abs=1e-12)
    assert theta == pytest.approx(closure_fold_angle(8, REF.beta), abs=1e-9)
    half_cos = 1 / (math.tan(math.radians(22.5)) * math.tan(math.radians(75)))
    assert math.cos(theta / 2) == pytest.approx(half_cos, abs=1e-12)
    assert half_cos == pytest.approx(0.646887, abs=1e-6)


def test_closed_ring_residual_small():
    cfg = reference_wheel()
    mesh = assemble_ring(cfg, solve_closure(cfg))
    assert mesh.closure_residual <= 1e-6 * REF.a


def test_open_ring_reports_residual():
    cfg = reference_wheel()
    mesh = assemble_ring(cfg, 3.0)
    assert mesh.closure_residual > 1e-3


@settings(max_examples=40, deadline=None)
@given(closable())
def test_solver_agrees_with_closed_form(pair):
    cell, n = pair
    cfg = WheelConfig(cell, n_circ=n, theta_range=(1e-3, math.pi))
    assert abs(solve_closure(cfg) - closure_fold_angle(n, cell.beta)) <= 1e-9


def test_boundary_angle_folds_completely():
    assert closure_fold_angle(8, math.pi / 8) == pytest.approx(0.0, abs=1e-5)
    near = CellParams(10.0, 30.0, 18.0, math.pi / 8 * (1 - 1e-6))
    theta = solve_closure(WheelConfig(near, 8, theta_range=(1e-6, math.pi)))
    assert theta < 1e-2
    assert theta == pytest.approx(closure_fold_angle(8, near.beta), abs=1e-9)


def test_beyond_boundary_no_closure():
    cell = CellParams(15.0, 30.0, 18.0, math.radians(30.0))
    with pytest.raises(NoClosure):
        solve_closure(WheelConfig(cell, 8, require_closure=False))


def _rot(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


@pytest.mark.parametrize("theta", [THETA_REF, 1.0, 2.5])
def test_ring_rotational_symmetry(theta):
    mesh = assemble_ring(reference_wheel(), theta)
    gamma = 2 * math.pi / 8
    for k in range(8):
        np.testing.assert_allclose(mesh.cells[:, k], mesh.cells[:, 0] @ _rot(k * gamma).T,
                                   atol=1e-9 * REF.a)


def test_closed_ring_seams_coincide():
    mesh = assemble_ring(reference_wheel(), THETA_REF)
    nxt = np.roll(mesh.cells, -1, axis=1)
    for p, q in SEAM_PAIRS:
        gap = np.linalg.norm(mesh.cells[:, :, VID[p]] - nxt[:, :, VID[q]], axis=-1)
        assert gap.max() <= 1e-9 * REF.a


def test_flat_strip_width():
    cfg = WheelConfig(REF, 8, 2, require_closure=False)
    assert measure_width(assemble_ring(cfg, math.pi)) == pytest.approx(2 * 2 * REF.b, rel=1e-12)


def test_width_monotone_and_matches_formula():
    cfg = reference_wheel()
    thetas = np.linspace(*cfg.theta_range, 40)
    widths = [measure_width(assemble_ring(cfg, t)) for t in thetas]
    assert np.all(np.diff(widths) > 0)
    for t, w in zip(thetas, widths):
        assert w == pytest.approx(wheel_width(2, REF.b, t), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(closable(), st.floats(0.5, 5.0))
def test_radius_scales_with_lengths(pair, s):
    cell, n = pair
    theta = closure_fold_angle(n, cell.beta)
    cfg = WheelConfig(cell, n, theta_range=(1e-3, math.pi))
    big = WheelConfig(cell.scaled(s), n, theta_range=(1e-3, math.pi))
    r0, i0 = measure_radius(assemble_ring(cfg, theta))
    r1, i1 = measure_radius(assemble_ring(big, theta))
    assert r1 == pytest.approx(s * r0, rel=1e-9)
    assert i1 == pytest.approx(s * i0, rel=1e-9, abs=1e-9 * s * cell.a)
    assert r0 - i0 > 0


def test_reference_radii():
    r_out, r_in = measure_radius(assemble_ring(reference_wheel(), THETA_REF))
    assert r_out == pytest.approx(40.995664662451404, rel=1e-12)
    assert outer_radius(REF, 8, THETA_REF) == pytest.approx(r_out, rel=1e-12)
    assert 0 < r_in < r_out


def test_width_and_radius_continuous():
    cfg = reference_wheel()
    for t in np.linspace(cfg.theta_range[0] + 1e-5, math.pi - 1e-5, 25):
        a, b = assemble_ring(cfg, t), assemble_ring(cfg, t + 1e-6)
        assert abs(measure_width(a) - measure_width(b)) < 1e-4
        ra, rb = measure_radius(a), measure_radius(b)
        assert abs(ra[0] - rb[0]) < 1e-4 and abs(ra[1] - rb[1]) < 1e-4


def _read_obj(path):
    verts, faces = [], []
    for line in path.read_text().splitlines():
        if line.startswith("v "):
            verts.append([float(v) for v in line.split()[1:]])
        elif line.startswith("f "):
            faces.append([int(v) - 1 for v in line.split()[1:]])
    return np.array(verts), np.array(faces)


def test_obj_round_trip(tmp_path):
    mesh = assemble_ring(reference_wheel(), THETA_REF)
    verts, tris = mesh.merged()
    v, f = _read_obj(export_mesh(mesh, tmp_path / "wheel.obj"))
    assert v.shape == verts.shape and f.shape == tris.shape
    np.testing.assert_allclose(v, verts, atol=1e-6)
    np.testing.assert_array_equal(f, tris)


def test_closed_mesh_vertex_count():
    """Shared seam and column vertices are merged exactly once."""
    cfg = reference_wheel()
    verts, _ = assemble_ring(cfg, THETA_REF).merged()
    # Per cell: 17 slots; the top margin (5 slots) is the next cell's bottom
    # margin, and the right side (4 slots besides shared corners) meets the
    # next column's left side.
    per_ring_column = 17 - 5
    shared_sides = (cfg.n_width - 1) * cfg.n_circ * 3
    assert len(verts) == cfg.n_width * cfg.n_circ * per_ring_column - shared_sides


def test_open_mesh_keeps_seams_apart():
    cfg = reference_wheel()
    closed, _ = assemble_ring(cfg, THETA_REF).merged()
    opened, _ = assemble_ring(cfg, 3.0).merged()
    assert len(opened) > len(closed)


def test_export_bad_path(tmp_path):
    mesh = assemble_ring(reference_wheel(), THETA_REF)
    with pytest.raises(IoError):
        export_mesh(mesh, tmp_path / "missing" / "w.obj")
    with pytest.raises(IoError):
        export_mesh(mesh, "")
