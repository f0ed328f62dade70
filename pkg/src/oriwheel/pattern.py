"""Flat crease pattern of the wheel: unit cell, tiling, vertex checks, export.

Axis convention: x runs along the wheel axis (width), y runs around the
circumference. A unit cell spans 2b in x and a = l_t + l_u in y; its interior
vertex T sits on the vertical centerline, l_u above the bottom margin.

Cell anatomy (T-centred coordinates)::

    TL ---QL--- F ---QR--- TR        y = l_t
    |   S1      |      S2   |
    DL          |          DR        y = b tan(beta)
    |   `-.     T     .-'   |        y = 0
    |      S4   |   S3      |
    PL2-PL1     |     PR1-PR2        y = -l_u + h
    | S5 |      |      | S6 |
    BL--PL0---- M ----PR0--BR        y = -l_u

T-F is the single mountain crease; T-M, T-DR and T-DL are valleys. S5 and S6
are rectangular hub plates cut from the bottom corners. QL and QR mark where
the plates of the next cell up attach, so tiled seams need no edge splitting.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import Infeasible, InvalidParams, IoError


class CreaseKind(str, Enum):
    MOUNTAIN = "mountain"
    VALLEY = "valley"
    BORDER = "border"


def _check_real(name, value):
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not math.isfinite(value):
        raise InvalidParams(f"{name} must be a finite number, got {value!r}")


@dataclass(frozen=True)
class CellParams:
    """Unit-cell geometry. Lengths in mm, beta in radians."""

    l_t: float
    l_u: float
    b: float
    beta: float

    def __post_init__(self):
        for name in ("l_t", "l_u", "b", "beta"):
            _check_real(name, getattr(self, name))
        if min(self.l_t, self.l_u, self.b) <= 0:
            raise InvalidParams("l_t, l_u and b must be positive")
        if not 0.0 < self.beta < math.pi / 2:
            raise InvalidParams("beta must lie strictly between 0 and pi/2")
        if self.l_u <= self.l_t:
            raise InvalidParams("l_u must exceed l_t (degenerate cone otherwise)")
        if self.b * math.tan(self.beta) >= self.l_t:
            raise InvalidParams(
                "diagonal valleys must reach the side border below the top corner: "
                "need b*tan(beta) < l_t"
            )

    @property
    def a(self) -> float:
        """Cell length along the circumference."""
        return self.l_t + self.l_u

    @property
    def diag_rise(self) -> float:
        return self.b * math.tan(self.beta)

    @property
    def plate_width(self) -> float:
        return 0.5 * self.b

    @property
    def plate_height(self) -> float:
        return 0.5 * (self.l_u - self.l_t)

    def scaled(self, s: float) -> "CellParams":
        return CellParams(self.l_t * s, self.l_u * s, self.b * s, self.beta)


@dataclass(frozen=True)
class WheelConfig:
    """Cell geometry plus cell counts and the actuated fold-angle interval."""

    cell: CellParams
    n_circ: int
    n_width: int = 1
    theta_range: tuple = (0.05, math.pi)
    # Off only for probing the numeric closure search outside its domain.
    require_closure: bool = True

    def __post_init__(self):
        for name, lo in (("n_circ", 3), ("n_width", 1)):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, numbers.Integral) or v < lo:
                raise InvalidParams(f"{name} must be an integer >= {lo}, got {v!r}")
        try:
            lo, hi = (float(t) for t in self.theta_range)
        except (TypeError, ValueError):
            raise InvalidParams("theta_range must be a pair of angles") from None
        object.__setattr__(self, "theta_range", (lo, hi))
        if not (0.0 < lo <= hi <= math.pi):
            raise InvalidParams("theta_range must satisfy 0 < lo <= hi <= pi")
        from .analytics import feasibility

        if self.require_closure and not feasibility(self.cell, self.n_circ):
            raise Infeasible(
                f"ring cannot close: tan(pi/{self.n_circ})*tan(pi/2 - beta) < 1 "
                f"(beta={math.degrees(self.cell.beta):.3f} deg exceeds 180/n_circ)"
            )

    @property
    def gamma(self) -> float:
        return 2.0 * math.pi / self.n_circ



def reference_wheel() -> WheelConfig:
    """Two columns of eight 18 mm cells whose width actuates from 22 to 72 mm."""
    cell = CellParams(l_t=10.0, l_u=30.0, b=18.0, beta=math.radians(15.0))
    lo = 2.0 * math.asin(22.0 / 72.0)
    return WheelConfig(cell, n_circ=8, n_width=2, theta_range=(lo, math.pi))

@dataclass(frozen=True)
class Edge:
    v0: int
    v1: int
    kind: CreaseKind


@dataclass(frozen=True)
class Facet:
    vertices: tuple
    role: str
    cell: tuple = (0, 0)


@dataclass(frozen=True)
class CreasePattern:
    vertices: np.ndarray
    edges: tuple
    facets: tuple
    n_width: int = 1
    n_circ: int = 1

    def crease_counts(self) -> dict:
        counts = {k: 0 for k in CreaseKind}
        for e in self.edges:
            counts[e.kind] += 1
        return counts

    def incident(self, v: int) -> list:
        return [e for e in self.edges if v in (e.v0, e.v1)]

    def interior_vertices(self) -> list:
        """Vertices whose every incident edge is a fold (no border edge)."""
        has_border = np.zeros(len(self.vertices), bool)
        has_crease = np.zeros(len(self.vertices), bool)
        for e in self.edges:
            target = has_border if e.kind is CreaseKind.BORDER else has_crease
            target[e.v0] = target[e.v1] = True
        return [int(v) for v in np.flatnonzero(has_crease & ~has_border)]

    def bbox(self) -> tuple:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(hi[0] - lo[0]), float(hi[1] - lo[1])

    def edge_length(self, e: Edge) -> float:
        return float(np.linalg.norm(self.vertices[e.v1] - self.vertices[e.v0]))


# Symbolic lattice: x slot 0..4 is -b, -b/2, 0, b/2, b; y level 0..4 is
# -l_u, -l_u + h, 0, b tan(beta), l_t. Level 4 of row k is level 0 of row k+1.
VERTEX_NAMES = ("T", "F", "M", "DR", "DL", "TR", "TL", "BR", "BL",
                "PL0", "PL1", "PL2", "PR0", "PR1", "PR2", "QL", "QR")
VERTEX_SLOTS = {
    "T": (2, 2), "F": (2, 4), "M": (2, 0), "DR": (4, 3), "DL": (0, 3),
    "TR": (4, 4), "TL": (0, 4), "BR": (4, 0), "BL": (0, 0),
    "PL0": (1, 0), "PL1": (1, 1), "PL2": (0, 1),
    "PR0": (3, 0), "PR1": (3, 1), "PR2": (4, 1),
    "QL": (1, 4), "QR": (3, 4),
}
_M, _V, _B = CreaseKind.MOUNTAIN, CreaseKind.VALLEY, CreaseKind.BORDER
CELL_EDGES = (
    ("T", "F", _M), ("T", "M", _V), ("T", "DR", _V), ("T", "DL", _V),
    ("BL", "PL0", _B), ("PL0", "M", _B), ("M", "PR0", _B), ("PR0", "BR", _B),
    ("BR", "PR2", _B), ("PR2", "DR", _B), ("DR", "TR", _B), ("TR", "QR", _B),
    ("QR", "F", _B), ("F", "QL", _B), ("QL", "TL", _B), ("TL", "DL", _B),
    ("DL", "PL2", _B), ("PL2", "BL", _B),
    ("PL0", "PL1", _B), ("PL1", "PL2", _B), ("PR0", "PR1", _B), ("PR1", "PR2", _B),
)
# Counter-clockwise polygons in the flat state.
CELL_FACETS = (
    ("S1", ("T", "F", "QL", "TL", "DL")),
    ("S2", ("T", "DR", "TR", "QR", "F")),
    ("S3", ("T", "M", "PR0", "PR1", "PR2", "DR")),
    ("S4", ("T", "DL", "PL2", "PL1", "PL0", "M")),
    ("S5", ("BL", "PL0", "PL1", "PL2")),
    ("S6", ("PR0", "BR", "PR2", "PR1")),
)
# Plates ride rigidly on their host facet.
PLATE_HOST = {"S5": "S4", "S6": "S3"}


def cell_local_vertices(cell: CellParams) -> np.ndarray:
    """(17, 2) flat coordinates with T at the origin, ordered as VERTEX_NAMES."""
    xs = (-cell.b, -0.5 * cell.b, 0.0, 0.5 * cell.b, cell.b)
    ys = (-cell.l_u, -cell.l_u + cell.plate_height, 0.0, cell.diag_rise, cell.l_t)
    return np.array([(xs[VERTEX_SLOTS[n][0]], ys[VERTEX_SLOTS[n][1]]) for n in VERTEX_NAMES])


def _tile(cell: CellParams, n_width: int, n_circ: int) -> CreasePattern:
    # Lattice coordinates measured from the pattern's lower-left corner.
    xs = (0.0, 0.5 * cell.b, cell.b, 1.5 * cell.b)
    ys = (0.0, cell.plate_height, cell.l_u, cell.l_u + cell.diag_rise)
    index: dict = {}
    coords = []

    def vid(key):
        if key not in index:
            gx, gy = key
            index[key] = len(coords)
            coords.append((gx // 4 * 2 * cell.b + xs[gx % 4], gy // 4 * cell.a + ys[gy % 4]))
        return index[key]

    edges: dict = {}
    facets = []
    for k in range(n_circ):
        for i in range(n_width):
            ids = {n: vid((4 * i + sx, 4 * k + sy)) for n, (sx, sy) in VERTEX_SLOTS.items()}
            for p, q, kind in CELL_EDGES:
                key = frozenset((ids[p], ids[q]))
                edges.setdefault(key, Edge(ids[p], ids[q], kind))
            for role, names in CELL_FACETS:
                facets.append(Facet(tuple(ids[n] for n in names), role, (i, k)))
    return CreasePattern(np.array(coords, float), tuple(edges.values()), tuple(facets),
                         n_width, n_circ)


def build_unit_cell(cell: CellParams) -> CreasePattern:
    """One-cell pattern; lower-left corner at the origin."""
    if not isinstance(cell, CellParams):
        raise InvalidParams("expected CellParams")
    return _tile(cell, 1, 1)


def tile_pattern(config: WheelConfig) -> CreasePattern:
    """n_width x n_circ array of cells with shared seam vertices and edges merged."""
    return _tile(config.cell, config.n_width, config.n_circ)


def sector_angles(pattern: CreasePattern, v: int) -> np.ndarray:
    """Angles between consecutive incident edges, sorted counter-clockwise."""
    p = pattern.vertices[v]
    dirs = []
    for e in pattern.incident(v):
        w = e.v1 if e.v0 == v else e.v0
        d = pattern.vertices[w] - p
        dirs.append(math.atan2(d[1], d[0]) % (2 * math.pi))
    dirs = np.sort(dirs)
    return np.diff(np.append(dirs, dirs[0] + 2 * math.pi))


def maekawa_ok(pattern: CreasePattern, v: int) -> bool:
    kinds = [e.kind for e in pattern.incident(v)]
    return abs(kinds.count(_M) - kinds.count(_V)) == 2


def kawasaki_ok(pattern: CreasePattern, v: int, tol: float = 1e-12) -> bool:
    s = sector_angles(pattern, v)
    if len(s) % 2:
        return False
    return abs(s[0::2].sum() - math.pi) <= tol and abs(s[1::2].sum() - math.pi) <= tol


_SVG_STYLE = {
    CreaseKind.MOUNTAIN: 'stroke="#c0392b" stroke-width="0.5" fill="none"',
    CreaseKind.VALLEY: 'stroke="#2e6fd8" stroke-width="0.5" stroke-dasharray="2,1" fill="none"',
    CreaseKind.BORDER: 'stroke="#000000" stroke-width="0.5" fill="none"',
}


def _writable(path) -> Path:
    if path is None or str(path) == "":
        raise IoError("empty output path")
    return Path(path)


def export_pattern(pattern: CreasePattern, path) -> Path:
    """Write an SVG (1 user unit = 1 mm) with one group per crease kind."""
    path = _writable(path)
    w, h = pattern.bbox()
    x0, y0 = pattern.vertices.min(axis=0)
    pad = 1.0
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w + 2 * pad:.6f}mm" '
        f'height="{h + 2 * pad:.6f}mm" viewBox="{-pad:.6f} {-pad:.6f} '
        f'{w + 2 * pad:.6f} {h + 2 * pad:.6f}">',
    ]
    for kind in CreaseKind:
        lines.append(f'  <g id="{kind.value}" {_SVG_STYLE[kind]}>')
        for e in pattern.edges:
            if e.kind is not kind:
                continue
            (ax, ay), (bx, by) = pattern.vertices[e.v0], pattern.vertices[e.v1]
            # SVG y grows downward; flip so the pattern reads bottom-up.
            lines.append(
                f'    <path d="M {ax - x0:.6f} {h - (ay - y0):.6f} '
                f'L {bx - x0:.6f} {h - (by - y0):.6f}"/>'
            )
        lines.append("  </g>")
    lines.append("</svg>")
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def export_pattern_csv(pattern: CreasePattern, vertices_path, edges_path) -> tuple:
    """Vertex table (id,x_mm,y_mm) and edge table (v0,v1,kind)."""
    vpath, epath = _writable(vertices_path), _writable(edges_path)
    vrows = ["id,x_mm,y_mm"] + [f"{i},{x:.9f},{y:.9f}" for i, (x, y) in enumerate(pattern.vertices)]
    erows = ["v0,v1,kind"] + [f"{e.v0},{e.v1},{e.kind.value}" for e in pattern.edges]
    try:
        vpath.write_text("\n".join(vrows) + "\n")
        epath.write_text("\n".join(erows) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write pattern tables: {exc}") from exc
    return vpath, epath
