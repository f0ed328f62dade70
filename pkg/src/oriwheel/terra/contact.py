"""Plate-wise pressure-sinkage and friction contact against a sand half-space.

World frame: x along the (possibly inclined) ground, z normal to it and up,
the undisturbed surface at z = 0. Forces in N, lengths in mm, time in s.

A plate is engaged when its centroid lies below the surface and it moves
into the sand along its outward normal, or rests against it. An engaged plate
at depth d carries pressure k_sink * d**n_exp, plus friction mu times that
pressure against tangential slip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from numba import njit

from ..errors import InvalidParams

ENGAGE_TOL = 1e-9


@dataclass(frozen=True)
class TerrainParams:
    """Soil constants. k_sink in N/mm^(2+n_exp); damping in N*s/mm^3."""

    k_sink: float
    n_exp: float = 1.0
    mu: float = 0.2
    slope: float = 0.0
    g: float = 9810.0
    # Rate-dependent pressure per unit penetration speed; keeps settling overdamped.
    damping: float = 2e-5
    # Slip speed (mm/s) over which friction ramps to its full value.
    slip_scale: float = 1.0

    def __post_init__(self):
        for name in ("k_sink", "n_exp", "mu", "slope", "g", "damping", "slip_scale"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidParams(f"{name} must be a finite number")
        if self.k_sink <= 0 or self.n_exp <= 0 or self.mu < 0:
            raise InvalidParams("need k_sink > 0, n_exp > 0, mu >= 0")
        if abs(self.slope) >= math.pi / 2:
            raise InvalidParams("|slope| must be below pi/2")
        if self.damping < 0 or self.slip_scale <= 0 or self.g <= 0:
            raise InvalidParams("need damping >= 0, slip_scale > 0, g > 0")

    def with_(self, **kw) -> "TerrainParams":
        d = dict(self.__dict__)
        d.update(kw)
        return TerrainParams(**d)


@dataclass(frozen=True)
class Pose:
    """Axle position (x, z) in mm and wheel rotation angle (rad, clockwise positive)."""

    x: float
    z: float
    phi: float


def _rot(phi):
    # Clockwise rotation of the rolling plane (body y -> world x, body z -> world z).
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, s], [-s, c]])


@dataclass
class WorldPlates:
    """Plates placed in the world; 3-vectors ordered (x, lateral, z)."""

    centroids: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    offsets: np.ndarray  # centroid minus axle, (P, 3)
    spin: np.ndarray  # velocity from wheel rotation, (P, 3)


def place(plates, pose: Pose, omega: float) -> WorldPlates:
    rot = _rot(pose.phi)
    off2 = plates.centroids[:, 1:] @ rot.T
    nrm2 = plates.normals[:, 1:] @ rot.T
    offsets = np.column_stack([off2[:, 0], plates.centroids[:, 0], off2[:, 1]])
    normals = np.column_stack([nrm2[:, 0], plates.normals[:, 0], nrm2[:, 1]])
    centroids = offsets + np.array([pose.x, 0.0, pose.z])
    # omega > 0 turns the wheel clockwise: the bottom point moves backward.
    spin = omega * np.column_stack([offsets[:, 2], np.zeros(len(offsets)), -offsets[:, 0]])
    return WorldPlates(centroids, normals, plates.areas, offsets, spin)


def lowest_point(plates, pose: Pose) -> float:
    """World z of the lowest hull vertex."""
    rot = _rot(pose.phi)
    return float(pose.z + (plates.vertices[:, 1:] @ rot.T)[:, 1].min())


def plate_forces(plates, pose: Pose, velocity, omega: float, terrain: TerrainParams) -> tuple:
    """Net soil force (x, lateral, z) in N and torque about the axle in N*mm.

    ``velocity`` is the axle velocity (vx, vz) in mm/s. The torque is the
    component about the wheel axis, positive when it resists omega > 0.
    """
    wp = place(plates, pose, omega)
    vel = wp.spin + np.array([velocity[0], 0.0, velocity[1]])
    depth = -wp.centroids[:, 2]
    into = np.einsum("ij,ij->i", vel, wp.normals)
    # Plates sliding tangentially rest on the sand; the tolerance keeps round-off
    # from deciding their engagement differently for +omega and -omega.
    speed = np.linalg.norm(vel, axis=1)
    engaged = (depth > 0) & (into >= -ENGAGE_TOL * (1.0 + speed))
    if not engaged.any():
        return np.zeros(3), 0.0
    d, n, a, v = depth[engaged], wp.normals[engaged], wp.areas[engaged], vel[engaged]
    p = terrain.k_sink * d ** terrain.n_exp
    force = -(p * a)[:, None] * n
    slip = v - np.einsum("ij,ij->i", v, n)[:, None] * n
    speed = np.linalg.norm(slip, axis=1)
    # Friction saturates smoothly over slip_scale, matching the implicit step.
    soft = np.sqrt(speed * speed + terrain.slip_scale ** 2)
    force -= (terrain.mu * p * a / soft)[:, None] * slip
    total = force.sum(axis=0)
    r = wp.offsets[engaged]
    torque = float(np.sum(r[:, 2] * force[:, 0] - r[:, 0] * force[:, 2]))
    return total, torque


@njit(cache=True)
def _objective(nx, nz, cap, visc, fr, sx, sz, vx, vz, fvx, fvz, M, h, kink, slip_scale,
               want_hessian):
    """Step objective, gradient and (optionally) Hessian at axle velocity (vx, vz)."""
    eps2 = slip_scale * slip_scale
    phi = 0.0
    gx = gz = hxx = hxz = hzz = 0.0
    for i in range(nx.size):
        ux = sx[i] + vx
        uz = sz[i] + vz
        s = nx[i] * ux + nz[i] * uz
        sp = s if s > 0.0 else 0.0
        if sp < kink:
            hub = sp * sp / (2.0 * kink)
            lam = cap[i] * sp / kink + visc[i] * sp
        else:
            hub = sp - 0.5 * kink
            lam = cap[i] + visc[i] * sp
        # |slip|^2 = |u|^2 - s^2 because n is a unit vector and u has no lateral part.
        slip2 = ux * ux + uz * uz - s * s
        root = np.sqrt((slip2 if slip2 > 0.0 else 0.0) + eps2)
        qx = ux - s * nx[i]
        qz = uz - s * nz[i]
        wf = fr[i] / root
        phi += cap[i] * hub + 0.5 * visc[i] * sp * sp + fr[i] * (root - slip_scale)
        gx += lam * nx[i] + wf * qx
        gz += lam * nz[i] + wf * qz
        if want_hessian:
            wn = 0.0
            if s > 0.0:
                wn = visc[i] + (cap[i] / kink if sp < kink else 0.0)
            wr = wf / (root * root)
            hxx += wn * nx[i] * nx[i] + wf * (1.0 - nx[i] * nx[i]) - wr * qx * qx
            hxz += wn * nx[i] * nz[i] - wf * nx[i] * nz[i] - wr * qx * qz
            hzz += wn * nz[i] * nz[i] + wf * (1.0 - nz[i] * nz[i]) - wr * qz * qz
    dx = vx - fvx
    dz = vz - fvz
    f = 0.5 * M * (dx * dx + dz * dz) + h * phi
    return (f, M * dx + h * gx, M * dz + h * gz,
            M + h * hxx, h * hxz, M + h * hzz)


@njit(cache=True)
def _newton(nx, nz, cap, visc, fr, sx, sz, vx, vz, fvx, fvz, M, h, kink, slip_scale):
    """Damped Newton on the convex step objective; returns the minimising velocity."""
    for _ in range(100):
        f0, gx, gz, hxx, hxz, hzz = _objective(nx, nz, cap, visc, fr, sx, sz, vx, vz,
                                               fvx, fvz, M, h, kink, slip_scale, True)
        det = hxx * hzz - hxz * hxz
        px = -(hzz * gx - hxz * gz) / det
        pz = -(hxx * gz - hxz * gx) / det
        slope = gx * px + gz * pz
        if -slope <= 1e-30 + 1e-20 * M:
            break
        lam = 1.0
        while True:
            f1 = _objective(nx, nz, cap, visc, fr, sx, sz, vx + lam * px, vz + lam * pz,
                            fvx, fvz, M, h, kink, slip_scale, False)[0]
            if f1 <= f0 + 1e-4 * lam * slope or lam < 1e-10:
                break
            lam *= 0.5
        vx += lam * px
        vz += lam * pz
        if max(abs(lam * px), abs(lam * pz)) < 1e-11:
            break
    return vx, vz


@njit(cache=True)
def _contact_step(body_c, body_n, areas, cos_p, sin_p, pos_x, pos_z, omega, v_start_x, v_start_z,
                  free_x, free_z, fric_in, k_sink, n_exp, mu, damping, M, h, kink, slip_scale,
                  pressure_out):
    """Place plates, solve the implicit step and sum the soil reaction in one pass."""
    n_all = areas.size
    idx = np.empty(n_all, np.int64)
    m = 0
    for i in range(n_all):
        off_z = -sin_p * body_c[i, 1] + cos_p * body_c[i, 2]
        pressure_out[i] = 0.0
        if pos_z + off_z < 0.0:
            idx[m] = i
            m += 1
    nx = np.empty(m)
    ny = np.empty(m)
    nz = np.empty(m)
    cap = np.empty(m)
    visc = np.empty(m)
    fr = np.empty(m)
    sx = np.empty(m)
    sz = np.empty(m)
    ox = np.empty(m)
    oz = np.empty(m)
    for j in range(m):
        i = idx[j]
        ox[j] = cos_p * body_c[i, 1] + sin_p * body_c[i, 2]
        oz[j] = -sin_p * body_c[i, 1] + cos_p * body_c[i, 2]
        nx[j] = cos_p * body_n[i, 1] + sin_p * body_n[i, 2]
        nz[j] = -sin_p * body_n[i, 1] + cos_p * body_n[i, 2]
        ny[j] = body_n[i, 0]
        a = areas[i]
        cap[j] = k_sink * (-(pos_z + oz[j])) ** n_exp * a
        visc[j] = damping * a
        fr[j] = mu * fric_in[i] * a
        # omega > 0 turns the wheel clockwise: the bottom point moves backward.
        sx[j] = omega * oz[j]
        sz[j] = -omega * ox[j]
    vx, vz = v_start_x, v_start_z
    if m > 0:
        vx, vz = _newton(nx, nz, cap, visc, fr, sx, sz, vx, vz, free_x, free_z, M, h, kink,
                         slip_scale)
    else:
        vx, vz = free_x, free_z
    eps2 = slip_scale * slip_scale
    fx_t = fy_t = fz_t = torque = 0.0
    for j in range(m):
        ux = sx[j] + vx
        uz = sz[j] + vz
        s = nx[j] * ux + nz[j] * uz
        sp = s if s > 0.0 else 0.0
        lam = cap[j] * min(sp / kink, 1.0) + visc[j] * sp
        slip2 = ux * ux + uz * uz - s * s
        wf = fr[j] / np.sqrt((slip2 if slip2 > 0.0 else 0.0) + eps2)
        fx = -lam * nx[j] - wf * (ux - s * nx[j])
        fz = -lam * nz[j] - wf * (uz - s * nz[j])
        # The lateral slip is -s * ny; friction opposes it.
        fy = -lam * ny[j] + wf * s * ny[j]
        fx_t += fx
        fy_t += fy
        fz_t += fz
        torque += oz[j] * fx - ox[j] * fz
        pressure_out[idx[j]] = lam / areas[idx[j]]
    return vx, vz, fx_t, fy_t, fz_t, torque


class ContactStep:
    """Implicit velocity update for one time step.

    Minimises 0.5*M*|v - v_free|^2 + dt*D(v) over the axle velocity v, where D
    is the contact dissipation: bearing capacity times penetration speed, a
    viscous term, and friction. Its minimiser is the velocity whose soil
    reaction obeys the engagement rule at the end of the step, so the sand
    never does positive work on a non-rotating wheel. Friction uses the
    pressure of the previous step, which keeps the problem convex.
    """

    # Smoothing width (mm/s) of the bearing-capacity kink. A loaded plate at
    # rest creeps at most this fast; trajectories match 1e-9 to 0.1 mm.
    KINK = 1e-2

    def __init__(self, terrain: TerrainParams, mass_g: float, plates):
        self.t = terrain
        self.M = mass_g * 1e-6  # N*s^2/mm
        self.body_c = np.ascontiguousarray(plates.centroids, float)
        self.body_n = np.ascontiguousarray(plates.normals, float)
        self.areas = np.ascontiguousarray(plates.areas, float)
        self.pressure = np.zeros(len(self.areas))

    def step(self, pose: Pose, omega: float, v_free, v_start, dt: float):
        """Advance one step; returns (velocity, soil force (x, lateral, z), torque).

        ``self.pressure`` holds the per-plate normal pressure after the step
        and feeds the friction bound of the next one.
        """
        t = self.t
        prev = self.pressure.copy()
        vx, vz, fx, fy, fz, torque = _contact_step(
            self.body_c, self.body_n, self.areas, math.cos(pose.phi), math.sin(pose.phi),
            float(pose.x), float(pose.z), float(omega), float(v_start[0]), float(v_start[1]),
            float(v_free[0]), float(v_free[1]), prev, t.k_sink, t.n_exp, t.mu, t.damping,
            self.M, dt, self.KINK, t.slip_scale, self.pressure)
        return np.array([vx, vz]), np.array([fx, fy, fz]), torque
