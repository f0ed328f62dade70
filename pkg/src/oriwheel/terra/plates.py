"""Plate discretisation of a wheel surface for the soil model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PlateSet:
    """Triangular plates in the wheel body frame.

    Body frame: x is the wheel axis (lateral), y-z is the rolling plane with
    the axle at the origin. Normals point to the side of the sheet that faces
    away from the axle.
    """

    centroids: np.ndarray  # (P, 3)
    normals: np.ndarray  # (P, 3) unit
    areas: np.ndarray  # (P,)
    roles: np.ndarray  # (P,) facet role label, e.g. "S3"
    vertices: np.ndarray  # (V, 3) hull points used for sinkage measurement

    def __len__(self):
        return len(self.areas)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def mirrored(self) -> "PlateSet":
        """Reflect the rolling plane (y -> -y): the same wheel mounted backwards."""
        flip = np.array([1.0, -1.0, 1.0])
        return PlateSet(self.centroids * flip, self.normals * flip, self.areas,
                        self.roles, self.vertices * flip)


def _subdivide(tris: np.ndarray, k: int) -> np.ndarray:
    """Split each triangle into k*k congruent children on a barycentric grid."""
    if k == 1:
        return tris
    a, e1, e2 = tris[:, 0], (tris[:, 1] - tris[:, 0]) / k, (tris[:, 2] - tris[:, 0]) / k
    out = []
    for i in range(k):
        for j in range(k - i):
            p = a + i * e1 + j * e2
            out.append(np.stack([p, p + e1, p + e2], 1))
            if i + j < k - 1:
                q = p + e1 + e2
                out.append(np.stack([p + e1, q, p + e2], 1))
    return np.concatenate(out)


def plates_from_triangles(tris: np.ndarray, roles, resolution: float) -> PlateSet:
    """Build plates from a (T, 3, 3) triangle soup, refining to edges <= resolution."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    tris = np.asarray(tris, float)
    roles = np.asarray(roles)
    longest = np.linalg.norm(tris - np.roll(tris, 1, axis=1), axis=2).max(axis=1)
    splits = np.maximum(1, np.ceil(longest / resolution - 1e-9)).astype(int)
    # Refine each triangle just enough; children inherit the parent's role.
    parts, part_roles = [], []
    for k in np.unique(splits):
        sel = splits == k
        parts.append(_subdivide(tris[sel], int(k)))
        part_roles.append(np.tile(roles[sel], int(k) ** 2))
    fine = np.concatenate(parts)
    fine_roles = np.concatenate(part_roles)
    edge = float(longest.max())
    cross = np.cross(fine[:, 1] - fine[:, 0], fine[:, 2] - fine[:, 0])
    dbl = np.linalg.norm(cross, axis=1)
    keep = dbl > 1e-12 * edge * edge
    fine, cross, dbl, fine_roles = fine[keep], cross[keep], dbl[keep], fine_roles[keep]
    normals = cross / dbl[:, None]
    centroids = fine.mean(axis=1)
    radial = centroids.copy()
    radial[:, 0] = 0.0
    flip = np.einsum("ij,ij->i", normals, radial) < 0
    normals[flip] *= -1.0
    hull = np.unique(tris.reshape(-1, 3), axis=0)
    return PlateSet(centroids, normals, 0.5 * dbl, fine_roles, hull)


def discretize_wheel(mesh, resolution: float = 4.0) -> PlateSet:
    """Plates for every facet triangle of a folded wheel mesh."""
    tri_idx = np.array([t for _, t in mesh.triangles])
    roles = np.array([r for r, _ in mesh.triangles])
    cells = mesh.cells.reshape(-1, mesh.cells.shape[2], 3)
    tris = cells[:, tri_idx, :].reshape(-1, 3, 3)
    return plates_from_triangles(tris, np.tile(roles, len(cells)), resolution)


def cylinder_plates(radius: float, width: float, segments: int = 72,
                    resolution: float = 4.0) -> PlateSet:
    """Prism control wheel, mirror-symmetric about the vertical plane through the axle."""
    # Half-step offset puts a facet midpoint at the bottom and keeps the
    # polygon symmetric under y -> -y for any even segment count.
    ang = (np.arange(segments) + 0.5) * 2 * math.pi / segments
    ring = np.column_stack([np.sin(ang), -np.cos(ang)]) * radius
    strips = max(1, math.ceil(width / resolution))
    xs = np.linspace(-0.5 * width, 0.5 * width, strips + 1)
    tris = []
    for j in range(segments):
        p, q = ring[j], ring[(j + 1) % segments]
        for x0, x1 in zip(xs[:-1], xs[1:]):
            a, b = np.array([x0, *p]), np.array([x1, *p])
            c, d = np.array([x1, *q]), np.array([x0, *q])
            m = 0.25 * (a + b + c + d)
            # Fan about the quad centre so the triangulation mirrors onto itself.
            tris += [(a, b, m), (b, c, m), (c, d, m), (d, a, m)]
    return plates_from_triangles(np.array(tris), np.full(len(tris), "C"), resolution)
