"""Search cell parameters and cell counts for a target wheel radius and width range.

Integers (n_circ, n_width) and a coarse crease-angle grid are enumerated; the
most promising cells are then refined with Nelder-Mead over the continuous
lengths and angle. The radius always comes from the folded geometry.
"""

from __future__ import annotations

import logging
import math
import numbers
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .analytics import AnalyticReport, analyze, closure_fold_angle, feasibility, theta_for_width
from .errors import InvalidParams, NoFeasibleDesign, Unconverged
from .kinematics import FLAT_EXCLUSION, outer_radius, solve_closure
from .pattern import CellParams, WheelConfig

log = logging.getLogger(__name__)

BETA_FRACTIONS = (0.2, 0.4, 0.6, 0.8)
REFINE_CELLS = 4


def _int_bounds(name, pair):
    try:
        lo, hi = pair
    except (TypeError, ValueError):
        raise InvalidParams(f"{name} must be a (lo, hi) pair") from None
    for v in (lo, hi):
        if isinstance(v, bool) or not isinstance(v, numbers.Integral):
            raise InvalidParams(f"{name} entries must be integers")
    if lo > hi:
        raise InvalidParams(f"{name} is empty")
    return int(lo), int(hi)


@dataclass(frozen=True)
class DesignTarget:
    r_target: float
    lb_min_req: float
    lb_max_req: float
    n_circ_bounds: tuple = (4, 16)
    n_width_bounds: tuple = (1, 4)
    tolerance: float = 1e-3
    size_bounds: tuple = (1.0, 200.0)  # mm, for b, l_t and l_u
    width_weight: float = 1.0
    max_evals: int = 5000

    def __post_init__(self):
        if not (self.r_target > 0 and 0 < self.lb_min_req < self.lb_max_req):
            raise InvalidParams("need r_target > 0 and 0 < lb_min_req < lb_max_req")
        nc = _int_bounds("n_circ_bounds", self.n_circ_bounds)
        nw = _int_bounds("n_width_bounds", self.n_width_bounds)
        if nc[0] < 3 or nw[0] < 1:
            raise InvalidParams("n_circ >= 3 and n_width >= 1 required")
        object.__setattr__(self, "n_circ_bounds", nc)
        object.__setattr__(self, "n_width_bounds", nw)
        lo, hi = self.size_bounds
        if not 0 < lo < hi:
            raise InvalidParams("size_bounds must satisfy 0 < lo < hi")
        if not (self.tolerance > 0 and self.width_weight >= 0 and self.max_evals > 0):
            raise InvalidParams("tolerance, width_weight and max_evals must be positive")


@dataclass
class DesignResult:
    config: WheelConfig
    report: AnalyticReport
    objective: float
    iterations: int
    trace: list = field(default_factory=list)  # best objective after each evaluation

    def to_dict(self) -> dict:
        c = self.config
        return {
            "cell": {"l_t": c.cell.l_t, "l_u": c.cell.l_u, "b": c.cell.b, "beta": c.cell.beta},
            "n_circ": c.n_circ,
            "n_width": c.n_width,
            "theta_range": list(c.theta_range),
            "objective": self.objective,
            "iterations": self.iterations,
            "report": self.report.to_dict(),
        }


class _Problem:
    """Objective over x = (log b, log l_t, log(l_u - l_t), logit of beta share)."""

    def __init__(self, target: DesignTarget, n_circ: int, n_width: int):
        self.t = target
        self.n_circ = n_circ
        self.n_width = n_width
        self.evals = 0
        self.best = (math.inf, None)
        self.trace: list = []

    def decode(self, x):
        lo, hi = self.t.size_bounds
        clip = lambda v: min(max(v, lo), hi)  # noqa: E731
        b = clip(math.exp(x[0]))
        l_t = clip(math.exp(x[1]))
        l_u = min(l_t + math.exp(x[2]), hi)
        # Keep beta inside both the closure bound and the cell-shape bound.
        cap = min(math.pi / self.n_circ, math.atan(l_t / b))
        share = 1.0 / (1.0 + math.exp(-min(max(x[3], -30.0), 30.0)))
        beta = cap * min(max(share, 1e-6), 1 - 1e-6)
        return b, l_t, l_u, beta

    def objective(self, x) -> float:
        self.evals += 1
        try:
            b, l_t, l_u, beta = self.decode(x)
            cell = CellParams(l_t=l_t, l_u=l_u, b=b, beta=beta)
            theta1 = closure_fold_angle(self.n_circ, beta)
            r = outer_radius(cell, self.n_circ, theta1)
        except (InvalidParams, ValueError, OverflowError):
            value = math.inf
        else:
            t = self.t
            lb_cap = 2.0 * self.n_width * b
            hinge = max(0.0, t.lb_max_req - lb_cap) / t.lb_max_req
            # The ring must close somewhere inside the actuated fold range.
            lo = theta_for_width(self.n_width, b, min(t.lb_min_req, lb_cap))
            hi = min(theta_for_width(self.n_width, b, min(t.lb_max_req, lb_cap)),
                     math.pi - FLAT_EXCLUSION)
            outside = max(0.0, lo - theta1, theta1 - hi) / math.pi
            value = (((r - t.r_target) / t.r_target) ** 2 + t.width_weight * hinge ** 2
                     + outside ** 2)
        if value < self.best[0]:
            self.best = (value, np.array(x, float))
        self.trace.append(self.best[0])
        return value


def _start(target: DesignTarget, n_circ: int, n_width: int, frac: float):
    """Initial point: b just wide enough, cell proportions of the reference wheel, radius scaled."""
    lo, hi = target.size_bounds
    b = min(max(target.lb_max_req / (2.0 * n_width), lo), hi)
    l_t, l_u = b * 10.0 / 18.0, b * 30.0 / 18.0
    cap = min(math.pi / n_circ, math.atan(l_t / b))
    beta = frac * cap
    cell = CellParams(l_t=l_t, l_u=l_u, b=b, beta=beta)
    r = outer_radius(cell, n_circ, closure_fold_angle(n_circ, beta))
    scale = target.r_target / r
    l_t, l_u = l_t * scale, l_u * scale
    return np.array([math.log(b), math.log(l_t), math.log(l_u - l_t), math.log(frac / (1 - frac))])


def _config(target: DesignTarget, prob: _Problem, x) -> WheelConfig:
    b, l_t, l_u, beta = prob.decode(x)
    cell = CellParams(l_t=l_t, l_u=l_u, b=b, beta=beta)
    n_w = prob.n_width
    lb_cap = 2.0 * n_w * b
    hi = theta_for_width(n_w, b, min(target.lb_max_req, lb_cap))
    lo = theta_for_width(n_w, b, min(target.lb_min_req, lb_cap))
    return WheelConfig(cell, prob.n_circ, n_w, (lo, hi))


def search(target: DesignTarget, seed: int = 0) -> DesignResult:
    """Grid over integers and crease angle, then simplex refinement of the best cells."""
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise InvalidParams("seed must be an integer")
    rng = np.random.default_rng(seed)
    size_hi = target.size_bounds[1]
    candidates = []
    for n_circ in range(target.n_circ_bounds[0], target.n_circ_bounds[1] + 1):
        for n_width in range(target.n_width_bounds[0], target.n_width_bounds[1] + 1):
            if 2.0 * n_width * size_hi < target.lb_max_req:
                continue
            for frac in BETA_FRACTIONS:
                prob = _Problem(target, n_circ, n_width)
                try:
                    x0 = _start(target, n_circ, n_width, frac)
                except (InvalidParams, ValueError):
                    continue
                f0 = prob.objective(x0)
                if math.isfinite(f0):
                    candidates.append((f0, n_circ, n_width, frac, x0))
    if not candidates:
        raise NoFeasibleDesign("no grid cell can reach the required width and close the ring")
    candidates.sort(key=lambda c: c[:4])
    evals = len(candidates)
    trace = [candidates[0][0]]
    # The best grid point stands if the budget runs out before refinement.
    f0, n_circ, n_width, _, x0 = candidates[0]
    best = (f0, _Problem(target, n_circ, n_width), x0)
    budget = target.max_evals - evals
    goal = target.tolerance ** 2
    for f0, n_circ, n_width, frac, x0 in candidates[:REFINE_CELLS]:
        if budget <= 0:
            break
        prob = _Problem(target, n_circ, n_width)
        # Seeded jitter of the simplex start; the optimum does not depend on it.
        x_init = x0 + 1e-3 * rng.standard_normal(x0.size)
        res = minimize(prob.objective, x_init, method="Nelder-Mead",
                       options={"maxfev": budget, "xatol": 1e-10, "fatol": 1e-16})
        budget -= prob.evals
        evals += prob.evals
        f_best, x_best = prob.best
        for v in prob.trace:
            trace.append(min(trace[-1], v))
        log.debug("cell n_circ=%d n_width=%d frac=%.2f: %.3e after %d evals (%s)",
                  n_circ, n_width, frac, f_best, prob.evals, res.message)
        if x_best is not None and f_best < best[0]:
            best = (f_best, prob, x_best)
        if best[0] <= goal:
            break
    f_best, prob, x_best = best
    config = _config(target, prob, x_best)
    solve_closure(config)
    assert feasibility(config.cell, config.n_circ)
    result = DesignResult(config, analyze(config), float(f_best), evals, trace)
    log.info("design objective %.3e after %d evaluations", f_best, evals)
    if f_best > goal:
        raise Unconverged(f"objective {f_best:.3e} above {goal:.1e} after {evals} evaluations",
                          best=result)
    return result
