"""Closed-form wheel models: closure angle, feasibility, width and radius.

These formulas are cross-checked against the folding geometry in
``kinematics``; nothing here builds a mesh except ``analyze`` when it needs a
measured radius.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

from .errors import Infeasible, InvalidParams

log = logging.getLogger(__name__)

# Slack for the arccos domain so that beta = pi/n_circ lands exactly on 0.
_DOMAIN_EPS = 1e-12


def _closure_cosine(n_circ: int, beta: float) -> float:
    half_gamma = math.pi / n_circ
    return math.tan(beta) / math.tan(half_gamma)


def closure_fold_angle(n_circ: int, beta: float) -> float:
    """Ring fold angle 2*arccos(1 / (tan(gamma/2) * tan(phi))), phi = pi/2 - beta."""
    if isinstance(n_circ, bool) or int(n_circ) != n_circ or n_circ < 3:
        raise InvalidParams("n_circ must be an integer >= 3")
    if not 0.0 < beta < math.pi / 2:
        raise InvalidParams("beta must lie strictly between 0 and pi/2")
    phi = math.pi / 2 - beta
    arg = 1.0 / (math.tan(math.pi / n_circ) * math.tan(phi))
    if arg > 1.0 + _DOMAIN_EPS:
        raise Infeasible(
            f"tan(gamma/2)*tan(phi) = {1 / arg:.6g} < 1 for n_circ={n_circ}, "
            f"beta={math.degrees(beta):.4f} deg"
        )
    return 2.0 * math.acos(min(arg, 1.0))


def feasibility(cell, n_circ: int) -> bool:
    """True when the closure angle exists, i.e. n_circ <= pi / beta."""
    return _closure_cosine(n_circ, cell.beta) <= 1.0 + _DOMAIN_EPS


def atan_length_bound(cell, n_circ: int) -> bool:
    """Cell-count bound n > pi / arctan((l_u - l_t)/2) evaluated with lengths in mm.

    It takes an arctangent of a length, so it carries no physical meaning; it
    is reported for comparison only and never gates anything.
    """
    return n_circ > math.pi / math.atan((cell.l_u - cell.l_t) / 2.0)


def wheel_width(n_width: int, b: float, theta1: float) -> float:
    """Axial wheel width 2 * n_width * b * sin(theta1 / 2)."""
    if not 0.0 <= theta1 <= math.pi:
        raise InvalidParams("theta1 must lie in [0, pi]")
    return 2.0 * n_width * b * math.sin(theta1 / 2.0)


def theta_for_width(n_width: int, b: float, width: float) -> float:
    """Inverse of ``wheel_width`` on [0, pi]."""
    ratio = width / (2.0 * n_width * b)
    if not 0.0 <= ratio <= 1.0 + 1e-15:
        raise InvalidParams(f"width {width} outside [0, {2 * n_width * b}]")
    return 2.0 * math.asin(min(ratio, 1.0))


@dataclass(frozen=True)
class Eq4Inputs:
    """Dimensionless groups of the solid-plus-hollow radius model.

    ``lambda2 = l_t/b``, ``x = l_1/l_t``, ``y = 2*l_2/(l_u - l_t)``. Build it
    with ``from_lengths`` so the groups stay consistent with the cell.
    """

    lambda2: float
    x: float
    y: float
    l_1: float
    l_2: float

    @classmethod
    def from_lengths(cls, cell, l_1: float, l_2: float) -> "Eq4Inputs":
        if cell.l_u == cell.l_t:
            raise InvalidParams("l_u = l_t leaves y undefined")
        return cls(cell.l_t / cell.b, l_1 / cell.l_t, 2.0 * l_2 / (cell.l_u - cell.l_t), l_1, l_2)

    @property
    def groove_flag(self) -> bool:
        """False when y >= 1, which no physical groove produces."""
        return self.y < 1.0


def _radius_terms(b, l_t, l_u, beta, lam, x, y):
    s2, c2 = math.sin(2 * beta), math.cos(2 * beta)
    solid = b * (lam * s2 + c2) * math.sqrt(x * x * lam * lam + 1.0) / (lam * x * s2 + c2)
    hollow = 0.5 * (l_u - l_t) * math.sqrt((1.0 - y) ** 2 + (1.0 / math.tan(beta)) ** 2)
    return solid, hollow


def wheel_radius_eq4(cell, inputs: Eq4Inputs) -> float:
    """Literal evaluation of the two-term outer-radius expression."""
    if cell.l_u == cell.l_t:
        raise InvalidParams("l_u = l_t leaves y undefined")
    vals = (inputs.lambda2, inputs.x, inputs.y, inputs.l_1, inputs.l_2)
    if any(not math.isfinite(v) or v <= 0 for v in vals):
        raise InvalidParams("Eq4Inputs entries must be finite and positive")
    if abs(inputs.lambda2 - cell.l_t / cell.b) > 1e-12 * inputs.lambda2:
        raise InvalidParams("lambda2 does not match l_t/b of the cell")
    # Outside these ranges the expression still evaluates; the caller is warned.
    if cell.beta >= math.pi / 4:
        log.warning("beta >= pi/4 makes cos(2 beta) non-positive in the radius model")
    if not inputs.groove_flag:
        log.warning("y = %.6g >= 1 describes no physical groove", inputs.y)
    solid, hollow = _radius_terms(cell.b, cell.l_t, cell.l_u, cell.beta,
                               inputs.lambda2, inputs.x, inputs.y)
    return solid + hollow


def radius_model_floor(cell) -> float:
    """Greatest lower bound of the two-term radius over all x, y > 0.

    With cos(2 beta) > 0 the first term is minimised at x*lambda2 = tan(2 beta)
    where it equals l_t sin(2 beta) + b cos(2 beta); the second term is
    minimised at y = 1 where it equals (l_u - l_t) / (2 tan(beta)).
    """
    if not cell.beta < math.pi / 4:
        raise InvalidParams("bound derived for beta < pi/4 only")
    first = cell.l_t * math.sin(2 * cell.beta) + cell.b * math.cos(2 * cell.beta)
    return first + 0.5 * (cell.l_u - cell.l_t) / math.tan(cell.beta)


@dataclass(frozen=True)
class AnalyticReport:
    theta1_closure: float
    gamma: float
    phi: float
    beta: float
    lb_min: float
    lb_max: float
    lb_closure: float
    r_d: float
    r_d_source: str
    feasible: bool
    atan_length_bound_ok: bool
    width_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        rows = []
        for k, v in self.to_dict().items():
            if isinstance(v, float):
                v = f"{v:.9g}"
            rows.append((k, str(v)))
        w = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(w)}  {v}" for k, v in rows)


def analyze(config, eq4: Eq4Inputs | None = None) -> AnalyticReport:
    """Aggregate closure angle, width range and radius for one configuration."""
    cell = config.cell
    theta1 = closure_fold_angle(config.n_circ, cell.beta)
    lo, hi = config.theta_range
    lb_min = wheel_width(config.n_width, cell.b, lo)
    lb_max = wheel_width(config.n_width, cell.b, hi)
    if eq4 is not None:
        r_d, source = wheel_radius_eq4(cell, eq4), "eq4"
    else:
        from .kinematics import assemble_ring, measure_radius

        r_d, source = measure_radius(assemble_ring(config, theta1))[0], "mesh"
    return AnalyticReport(
        theta1_closure=theta1,
        gamma=2 * math.pi / config.n_circ,
        phi=math.pi / 2 - cell.beta,
        beta=cell.beta,
        lb_min=lb_min,
        lb_max=lb_max,
        lb_closure=wheel_width(config.n_width, cell.b, theta1),
        r_d=r_d,
        r_d_source=source,
        feasible=feasibility(cell, config.n_circ),
        atan_length_bound_ok=atan_length_bound(cell, config.n_circ),
        width_ratio=lb_max / lb_min if lb_min > 0 else math.inf,
    )


def load_ratio(load_g: float, robot_mass_g: float = 1348.5) -> float:
    """Load-carrying ratio in percent."""
    if robot_mass_g <= 0:
        raise InvalidParams("robot mass must be positive")
    return 100.0 * load_g / robot_mass_g
