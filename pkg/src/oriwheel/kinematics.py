"""Rigid folding of the unit cell and assembly of the closed wheel ring.

Fold parameter: ``theta_w`` is the dihedral angle across the down-ridge valley
T-M, measured inside the groove; pi is flat, 0 is fully folded. The same value
appears across the mountain T-F, so one angle describes the whole cell.

Cell frame: x along the wheel axis, the down ridge T-M along -y, the groove
below T opening toward -z. The hub lies on the +z side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import FoldInfeasible, IoError, NoClosure
from .pattern import (CELL_EDGES, CELL_FACETS, VERTEX_NAMES, VERTEX_SLOTS, CellParams,
                      WheelConfig, cell_local_vertices)

VID = {n: i for i, n in enumerate(VERTEX_NAMES)}
# Vertices on the top margin of a cell and their partners on the next cell's bottom margin.
SEAM_PAIRS = (("F", "M"), ("TR", "BR"), ("TL", "BL"), ("QL", "PL0"), ("QR", "PR0"))
_UPPER = {"F", "TR", "TL", "QL", "QR"}

# Fan triangulation from the first polygon vertex; every facet is star-shaped from it.
CELL_TRIANGLES = tuple(
    (role, (VID[names[0]], VID[names[j]], VID[names[j + 1]]))
    for role, names in CELL_FACETS
    for j in range(1, len(names) - 1)
)


@dataclass(frozen=True)
class FoldedCell:
    cell: CellParams
    theta_w: float
    vertices: np.ndarray  # (17, 3), ordered as pattern.VERTEX_NAMES
    facets: tuple = tuple((role, tuple(VID[n] for n in names)) for role, names in CELL_FACETS)

    def point(self, name: str) -> np.ndarray:
        return self.vertices[VID[name]]


def ridge_direction(beta: float, theta_w: float) -> np.ndarray:
    """Unit direction of the mountain T-F at the given fold."""
    s = math.sin(beta)
    c = math.cos(0.5 * theta_w) * math.cos(beta)
    den = s * s + c * c
    return np.array([0.0, (s * s - c * c) / den, -2.0 * c * s / den])


def fold_cell(cell: CellParams, theta_w: float) -> FoldedCell:
    """Closed-form rigid fold, on the branch continuous with the flat state."""
    if not (math.isfinite(theta_w) and 0.0 <= theta_w <= math.pi):
        raise FoldInfeasible(f"theta_w={theta_w!r} outside [0, pi]")
    flat = cell_local_vertices(cell)
    sh, ch = math.sin(0.5 * theta_w), math.cos(0.5 * theta_w)
    u = ridge_direction(cell.beta, theta_w)
    # Lower facets hinge on T-M: x maps onto the two groove walls.
    lower = np.column_stack([flat[:, 0] * sh, flat[:, 1], -np.abs(flat[:, 0]) * ch])
    # Upper facets: ridge coordinate along u, across-ridge along the in-plane normal.
    dr = lower[VID["DR"]]
    w_right = dr - (dr @ u) * u
    w_right /= np.linalg.norm(w_right)
    w_left = w_right * np.array([-1.0, 1.0, 1.0])
    out = lower.copy()
    for name in _UPPER:
        i = VID[name]
        x, y = flat[i]
        out[i] = y * u + abs(x) * (w_right if x >= 0 else w_left)
    out.setflags(write=False)
    return FoldedCell(cell, float(theta_w), out)


def _rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def ring_center(folded: FoldedCell, n_circ: int) -> np.ndarray:
    """Axis point in the cell frame that sends M of the next cell onto F.

    Solves (I - R) o = F - R M in the yz plane, R the rotation by 2 pi / n_circ.
    """
    rot = _rot_x(2.0 * math.pi / n_circ)
    rhs = folded.point("F") - rot @ folded.point("M")
    a = np.eye(3) - rot
    o = np.zeros(3)
    o[1:] = np.linalg.solve(a[1:, 1:], rhs[1:])
    return o


@dataclass(frozen=True)
class WheelMesh:
    """Folded wheel in the world frame: axis along +x through the origin."""

    config: WheelConfig
    theta1: float
    cells: np.ndarray  # (n_width, n_circ, 17, 3)
    closure_residual: float
    axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    triangles: tuple = CELL_TRIANGLES

    @property
    def points(self) -> np.ndarray:
        return self.cells.reshape(-1, 3)

    def merged(self, tol: float | None = None) -> tuple:
        """Deduplicated vertices and triangle indices for export.

        Copies of one lattice vertex are merged only when they coincide within
        ``tol`` (default 1e-9 * a); an open ring keeps its seam copies apart.
        """
        cfg = self.config
        tol = 1e-9 * cfg.cell.a if tol is None else tol
        period = 4 * cfg.n_circ
        groups: dict = {}
        for j in range(cfg.n_width):
            for k in range(cfg.n_circ):
                for name, (sx, sy) in VERTEX_SLOTS.items():
                    key = (4 * j + sx, (4 * k + sy) % period)
                    groups.setdefault(key, []).append((j, k, VID[name]))
        index = np.empty((cfg.n_width, cfg.n_circ, len(VERTEX_NAMES)), int)
        verts = []
        for members in groups.values():
            pts = np.array([self.cells[m] for m in members])
            if np.max(np.linalg.norm(pts - pts[0], axis=1)) <= tol:
                index[tuple(zip(*members))] = len(verts)
                verts.append(pts[0])
            else:
                for m, p in zip(members, pts):
                    index[m] = len(verts)
                    verts.append(p)
        tris = [
            tuple(index[j, k, t] for t in tri)
            for j in range(cfg.n_width)
            for k in range(cfg.n_circ)
            for _, tri in self.triangles
        ]
        return np.array(verts), np.array(tris, int)


def _seam_gaps(cells: np.ndarray) -> np.ndarray:
    top = [VID[p] for p, _ in SEAM_PAIRS]
    bottom = [VID[q] for _, q in SEAM_PAIRS]
    nxt = np.roll(cells, -1, axis=1)
    return np.linalg.norm(cells[:, :, top] - nxt[:, :, bottom], axis=-1)


def assemble_ring(config: WheelConfig, theta1: float) -> WheelMesh:
    """Place n_circ copies of the folded cell by successive rotation about the axis.

    Columns across the width are translated copies spaced by 2 b sin(theta1/2).
    The residual is the largest gap between matching seam vertices of
    neighbouring cells, including the last-to-first seam; it is reported, not
    required to vanish.
    """
    folded = fold_cell(config.cell, theta1)
    center = ring_center(folded, config.n_circ)
    base = folded.vertices - center
    step = 2.0 * config.cell.b * math.sin(0.5 * theta1)
    gamma = 2.0 * math.pi / config.n_circ
    rings = np.stack([base @ _rot_x(k * gamma).T for k in range(config.n_circ)])
    shifts = (np.arange(config.n_width) - 0.5 * (config.n_width - 1)) * step
    cells = rings[None, :, :, :] + shifts[:, None, None, None] * np.array([1.0, 0.0, 0.0])
    cells.setflags(write=False)
    residual = float(_seam_gaps(cells).max())
    return WheelMesh(config, float(theta1), cells, residual)


def outer_radius(cell: CellParams, n_circ: int, theta1: float) -> float:
    """Outer wheel radius from one folded cell and its ring centre (same as the full mesh)."""
    folded = fold_cell(cell, theta1)
    rel = folded.vertices - ring_center(folded, n_circ)
    return float(np.hypot(rel[:, 1], rel[:, 2]).max())


def closure_mismatch(cell: CellParams, n_circ: int, theta: float) -> float:
    """Signed radial mismatch of the outer corner seam TR / BR.

    Zero exactly where the ring closes rigidly. It also vanishes at the flat
    state, where the cells form a plain polygonal band.
    """
    folded = fold_cell(cell, theta)
    center = ring_center(folded, n_circ)
    r_top = np.linalg.norm((folded.point("TR") - center)[1:])
    r_bottom = np.linalg.norm((folded.point("BR") - center)[1:])
    return float(r_top - r_bottom)


def _full_residual(cell, n_circ, theta):
    folded = fold_cell(cell, theta)
    center = ring_center(folded, n_circ)
    rot = _rot_x(2.0 * math.pi / n_circ)
    gaps = [np.linalg.norm(folded.point(p) - center - rot @ (folded.point(q) - center))
            for p, q in SEAM_PAIRS]
    return max(gaps)


# Distance kept from the flat state so the trivial flat band is not returned.
FLAT_EXCLUSION = 1e-6


def solve_closure(config: WheelConfig, samples: int = 64, maxiter: int = 200) -> float:
    """Fold angle at which the ring closes, found by bracketing on ``closure_mismatch``."""
    cell, n = config.cell, config.n_circ
    tol = 1e-9 * cell.a
    lo, hi = config.theta_range
    hi = min(hi, math.pi - FLAT_EXCLUSION)
    if hi < lo:
        raise NoClosure("theta_range lies entirely inside the flat-state exclusion")
    for end in (lo, hi):
        if _full_residual(cell, n, end) <= tol:
            return float(end)
    grid = np.linspace(lo, hi, samples + 1)
    vals = [closure_mismatch(cell, n, t) for t in grid]
    for t0, t1, g0, g1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if g0 == 0.0 or g0 * g1 < 0.0:
            root = t0 if g0 == 0.0 else brentq(
                lambda t: closure_mismatch(cell, n, t), t0, t1,
                xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=maxiter)
            if _full_residual(cell, n, root) <= tol:
                return float(root)
    raise NoClosure(
        f"no fold angle in [{lo:.6g}, {hi:.6g}] closes the ring to {tol:.3g} mm"
    )


def measure_width(mesh: WheelMesh) -> float:
    """Extent of the mesh along the wheel axis."""
    x = mesh.points @ mesh.axis
    return float(x.max() - x.min())


def _origin_triangle_distance(tri2d: np.ndarray) -> np.ndarray:
    """Distance from the 2D origin to each triangle (0 when it contains the origin)."""
    a, b, c = tri2d[:, 0], tri2d[:, 1], tri2d[:, 2]

    def cross(p, q):
        return p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]

    d1, d2, d3 = cross(a, b), cross(b, c), cross(c, a)
    inside = ((d1 >= 0) & (d2 >= 0) & (d3 >= 0)) | ((d1 <= 0) & (d2 <= 0) & (d3 <= 0))

    def seg(p, q):
        d = q - p
        L2 = np.einsum("ij,ij->i", d, d)
        t = np.where(L2 > 0, -np.einsum("ij,ij->i", p, d) / np.where(L2 > 0, L2, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        return np.linalg.norm(p + t[:, None] * d, axis=1)

    dist = np.minimum(np.minimum(seg(a, b), seg(b, c)), seg(c, a))
    return np.where(inside, 0.0, dist)


def measure_radius(mesh: WheelMesh) -> tuple:
    """(r_outer, r_inner): farthest vertex from the axis, nearest surface point to it.

    The hollow radius is taken over the whole surface, not vertices only,
    because the inner rim is formed by crease edges whose midpoints come closer
    to the axis than their end vertices.
    """
    pts = mesh.points
    radial = pts - np.outer(pts @ mesh.axis, mesh.axis)
    r_outer = float(np.linalg.norm(radial, axis=1).max())
    tri_idx = np.array([t for _, t in mesh.triangles])
    tris = mesh.cells[:, :, tri_idx, :].reshape(-1, 3, 3)[:, :, 1:]
    r_inner = float(_origin_triangle_distance(tris).min())
    return r_outer, r_inner


def export_mesh(mesh: WheelMesh, path) -> Path:
    """Write a triangulated OBJ in mm with seam vertices merged."""
    if path is None or str(path) == "":
        raise IoError("empty output path")
    path = Path(path)
    verts, tris = mesh.merged()
    lines = [f"# wheel mesh theta1={mesh.theta1:.12g} rad closure_residual={mesh.closure_residual:.6e} mm"]
    lines += [f"v {x:.9f} {y:.9f} {z:.9f}" for x, y, z in verts]
    lines += [f"f {i + 1} {j + 1} {k + 1}" for i, j, k in tris]
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def cell_edge_pairs() -> tuple:
    """Vertex-index pairs of every pattern edge in one cell."""
    return tuple((VID[p], VID[q]) for p, q, _ in CELL_EDGES)
