"""Command-line front end: one JSON run document, six subcommands.

Run document (all sections optional; unknown keys are rejected)::

    {
      "seed": 0,
      "out": "results",
      "wheel":   {"l_t": 10, "l_u": 30, "b": 18, "beta_deg": 15,
                  "n_circ": 8, "n_width": 2, "width_range_mm": [22, 72]},
      "fold":    {"theta1": "closure"},
      "terrain": {"k_sink": 1.35e-4, "n_exp": 1.0, "mu": 0.2,
                  "damping": 2e-5, "slip_scale": 1.0, "calibrate": false},
      "sim":     {"dt": 0.001, "resolution": 8.0, "window": 8.0,
                  "scenarios": [{"name": "w22", "width": 22}]},
      "mission": {"frame_const": 203, "mass": 1348.5, "fold_rate": 0.5,
                  "safety_margin": 5, "channel_length": 500, "speed": 100,
                  "sand_drive": false,
                  "scenarios": [{"channel_width": 300, "sensor_sigma": 0, "n_readings": 9}]},
      "design":  {"r_target": 40, "lb_min_req": 22, "lb_max_req": 72,
                  "n_circ_bounds": [4, 16], "n_width_bounds": [1, 4],
                  "tolerance": 1e-3, "max_evals": 5000}
    }

Units are mm, s, N, g and rad throughout (``beta_deg`` and ``slope_deg`` are
the only degree inputs). ``theta_range`` in radians may replace
``width_range_mm``. Flags ``--out`` and ``--seed`` override the document.

Commands that write files print one path per line on stdout; summaries go to
stderr. ``analyze`` writes no files and prints its report on stdout.
Exit codes: 0 ok, 2 invalid input, 3 file error, 4 no feasible or
unconverged result, 5 numerical divergence. Log level comes from the
ORIWHEEL_LOG environment variable (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import numbers
import os
import sys
from pathlib import Path

from . import analytics, design_search, kinematics, mission, pattern
from .errors import (ActuationLimit, CalibrationFailed, FoldInfeasible, Infeasible, InvalidParams,
                     IoError, NeverEscaped, NoClosure, NoFeasibleDesign, NumericalDivergence, Unconverged)
from .terra.calibrate import CALIBRATED_SOIL, calibrate
from .terra import io as terra_io
from .terra import sim as terra_sim
from .terra import wheel as terra_wheel
from .terra.contact import TerrainParams

log = logging.getLogger("oriwheel")

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NO_RESULT, EXIT_DIVERGED = 0, 2, 3, 4, 5

SCHEMA = {
    "seed": None,
    "out": None,
    "wheel": {"l_t", "l_u", "b", "beta_deg", "n_circ", "n_width", "width_range_mm", "theta_range"},
    "fold": {"theta1"},
    "terrain": {"k_sink", "n_exp", "mu", "damping", "slip_scale", "calibrate"},
    "sim": {"dt", "resolution", "window", "scenarios"},
    "mission": {"frame_const", "mass", "fold_rate", "safety_margin", "channel_length", "speed",
                "initial_theta", "sand_drive", "scenarios"},
    "design": {"r_target", "lb_min_req", "lb_max_req", "n_circ_bounds", "n_width_bounds",
               "tolerance", "size_bounds", "width_weight", "max_evals"},
}
SIM_SCENARIO_KEYS = {"name", "width", "kind", "omega", "slope_deg", "duration", "start_sink",
                     "length", "added_g"}
MISSION_SCENARIO_KEYS = {"name", "channel_width", "sensor_sigma", "n_readings", "seed"}


class ConfigError(InvalidParams):
    """The run document does not match the schema."""


def _reject_unknown(where: str, got: dict, allowed) -> None:
    if not isinstance(got, dict):
        raise ConfigError(f"{where} must be an object")
    extra = sorted(set(got) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def validate(doc) -> dict:
    """Check a run document against the schema; returns it unchanged."""
    _reject_unknown("run document", doc, SCHEMA)
    for section, keys in SCHEMA.items():
        if keys is not None and section in doc:
            _reject_unknown(section, doc[section], keys)
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise ConfigError("seed must be an integer")
    for section, keys in (("sim", SIM_SCENARIO_KEYS), ("mission", MISSION_SCENARIO_KEYS)):
        scen = doc.get(section, {}).get("scenarios", [])
        if not isinstance(scen, list):
            raise ConfigError(f"{section}.scenarios must be a list")
        for i, s in enumerate(scen):
            _reject_unknown(f"{section}.scenarios[{i}]", s, keys)
    return doc


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate(doc)


def wheel_from(doc: dict) -> pattern.WheelConfig:
    w = doc.get("wheel")
    if not w:
        return pattern.reference_wheel()
    ref = pattern.reference_wheel()
    beta = math.radians(w["beta_deg"]) if "beta_deg" in w else ref.cell.beta
    n_circ = w.get("n_circ", ref.n_circ)
    if isinstance(n_circ, numbers.Integral) and n_circ >= 3 and beta >= math.pi / n_circ:
        # Report the closure limit before any cell-shape complaint.
        raise Infeasible(f"infeasible: ring of {n_circ} cells cannot close with beta="
                         f"{math.degrees(beta):.6g} deg (need beta < {180 / n_circ:.6g} deg)")
    cell = pattern.CellParams(w.get("l_t", ref.cell.l_t), w.get("l_u", ref.cell.l_u),
                              w.get("b", ref.cell.b), beta)
    n_width = w.get("n_width", ref.n_width)
    if "width_range_mm" in w and "theta_range" in w:
        raise ConfigError("give width_range_mm or theta_range, not both")
    if "width_range_mm" in w:
        lo_w, hi_w = w["width_range_mm"]
        if isinstance(n_width, numbers.Integral) and not isinstance(n_width, bool):
            theta_range = (analytics.theta_for_width(n_width, cell.b, lo_w),
                           analytics.theta_for_width(n_width, cell.b, hi_w))
        else:
            theta_range = ()
    else:
        theta_range = tuple(w.get("theta_range", ref.theta_range))
    return pattern.WheelConfig(cell, n_circ, n_width, theta_range)


def soil_from(doc: dict, config) -> TerrainParams:
    t = dict(doc.get("terrain", {}))
    if t.pop("calibrate", False):
        cal = calibrate(config=config)
        log.info("calibrated soil:\n%s", cal.table())
        base = cal.terrain
    else:
        base = CALIBRATED_SOIL
    return base.with_(**t) if t else base


def _out_dir(args, doc) -> Path:
    out = Path(args.out if args.out is not None else doc.get("out", "."))
    if not out.is_dir():
        raise IoError(f"output directory {out} does not exist")
    return out


def _write(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def cmd_pattern(args, doc) -> list:
    config = wheel_from(doc)
    out = _out_dir(args, doc)
    cp = pattern.tile_pattern(config)
    svg = pattern.export_pattern(cp, out / "pattern.svg")
    verts, edges = pattern.export_pattern_csv(cp, out / "pattern_vertices.csv",
                                              out / "pattern_edges.csv")
    counts = {k.value: v for k, v in cp.crease_counts().items()}
    print(f"crease counts: {counts}", file=sys.stderr)
    return [svg, verts, edges]


def cmd_analyze(args, doc) -> list:
    report = analytics.analyze(wheel_from(doc))
    if args.json:
        sys.stdout.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")
    else:
        sys.stdout.write(report.table() + "\n")
    return []


def _theta_for_fold(config, value):
    if value is None or value == "closure":
        return kinematics.solve_closure(config)
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigError("theta1 must be a number or 'closure'")
    lo, hi = config.theta_range
    if not lo <= value <= hi:
        raise InvalidParams(f"theta1={value} outside theta_range [{lo:.6g}, {hi:.6g}]")
    return float(value)


def cmd_fold(args, doc) -> list:
    config = wheel_from(doc)
    out = _out_dir(args, doc)
    raw = args.theta1 if args.theta1 is not None else doc.get("fold", {}).get("theta1")
    if isinstance(raw, str) and raw != "closure":
        try:
            raw = float(raw)
        except ValueError:
            raise ConfigError("theta1 must be a number or 'closure'") from None
    theta1 = _theta_for_fold(config, raw)
    mesh = kinematics.assemble_ring(config, theta1)
    width = kinematics.measure_width(mesh)
    r_outer, r_inner = kinematics.measure_radius(mesh)
    obj = kinematics.export_mesh(mesh, out / "wheel.obj")
    verts, _ = mesh.merged()
    info = {"theta1": theta1, "width_mm": width, "r_outer_mm": r_outer, "r_inner_mm": r_inner,
            "closure_residual_mm": mesh.closure_residual, "vertices": int(len(verts))}
    report = _write(out / "fold.json", _dump(info))
    print(f"theta1={theta1:.12g} width={width:.6f} mm r_outer={r_outer:.6f} mm "
          f"r_inner={r_inner:.6f} mm closure_residual={mesh.closure_residual:.3e} mm",
          file=sys.stderr)
    return [obj, report]


def _sim_scenarios(doc) -> list:
    raw = doc.get("sim", {}).get("scenarios")
    if raw is None:
        raw = [{"name": f"w{w}", "width": w} for w in (22, 38, 72)]
    return [terra_wheel.Scenario(**{"name": f"s{i}", **s}) for i, s in enumerate(raw)]


def _fmt(v) -> str:
    return "inf" if v == math.inf else f"{v:.6g}"


def cmd_sim(args, doc) -> list:
    config = wheel_from(doc)
    s = doc.get("sim", {})
    dt = s.get("dt", 1e-3)
    if isinstance(dt, bool) or not isinstance(dt, numbers.Real) or not 0 < dt <= terra_sim.MAX_DT:
        raise InvalidParams(f"dt must lie in (0, {terra_sim.MAX_DT}] s")
    resolution = s.get("resolution", terra_wheel.RESOLUTION)
    window = s.get("window", 8.0)
    scenarios = _sim_scenarios(doc)
    out = _out_dir(args, doc)
    soil = soil_from(doc, config)
    files, rows = [], []
    for sc in scenarios:
        plates = terra_wheel.wheel_plates(sc.width, config, resolution)
        case = terra_wheel.load_case(plates, sc.omega, sc.added_g)
        terrain = sc.terrain(soil)
        row = {"name": sc.name, "width_mm": sc.width, "kind": sc.kind}
        if sc.kind == "climb":
            res = terra_sim.slope_climb(case, terrain, sc.length, clearance=terra_wheel.CLEARANCE,
                                        budget=sc.duration, dt=dt)
            traj = res.trajectory
            row.update(passed=res.passed, reason=res.reason)
        else:
            traj = terra_sim.simulate(case, terrain, sc.duration, dt, start_sink=sc.start_sink)
            try:
                t_pt, d_pt = terra_sim.traverse_metrics(traj, sc.start_sink, min(window, sc.duration))
            except NeverEscaped as exc:
                t_pt, d_pt = exc.t_pt, exc.d_pt
            escaped = math.isfinite(t_pt)
            row.update(escaped=escaped, t_pt_s=t_pt if escaped else None, d_pt_mm=d_pt)
        row.update(mode=traj.mode.value, max_sinkage_mm=float(traj.z.max()),
                   final_x_mm=float(traj.x[-1]))
        rows.append(row)
        files.append(terra_io.write_trajectory_csv(traj, out / f"sim_{sc.name}.csv"))
        files.append(terra_io.plot_sinkage_svg({sc.name: traj}, out / f"sim_{sc.name}.svg"))
    summary = {"soil": {k: getattr(soil, k) for k in ("k_sink", "n_exp", "mu", "damping",
                                                        "slip_scale")},
               "dt": dt, "resolution": resolution, "scenarios": rows}
    files.append(_write(out / "sim_summary.json", _dump(summary)))
    lines = []
    for r in rows:
        if r["kind"] == "climb":
            lines.append(f"{r['name']:>10}  width={r['width_mm']:g} mm  "
                         f"{'PASS' if r['passed'] else 'FAIL'} ({r['reason']})")
        else:
            t_pt = r["t_pt_s"] if r["escaped"] else math.inf
            lines.append(f"{r['name']:>10}  width={r['width_mm']:g} mm  t_pt={_fmt(t_pt)} s  "
                         f"d_pt={_fmt(r['d_pt_mm'])} mm")
    files.append(_write(out / "sim_summary.txt", "\n".join(lines) + ("\n" if lines else "")))
    for line in lines:
        print(line, file=sys.stderr)
    return files


def cmd_mission(args, doc) -> list:
    m = dict(doc.get("mission", {}))
    raw = m.pop("scenarios", [{"channel_width": w} for w in (400, 300, 200)])
    channel_length = m.pop("channel_length", 500.0)
    speed = m.pop("speed", 100.0)
    sand = m.pop("sand_drive", False)
    spec = mission.RobotSpec(wheel=wheel_from(doc), **m)
    terrain = soil_from(doc, spec.wheel) if sand else None
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    out = _out_dir(args, doc)
    files, rows = [], []
    for i, s in enumerate(raw):
        s = dict(s)
        name = s.pop("name", f"m{i}")
        # Each scenario draws from its own stream derived from the run seed.
        s.setdefault("seed", seed + i)
        sc = mission.ChannelScenario(**s)
        trace = mission.run_mission(spec, sc, channel_length, speed, terrain)
        files.append(_write(out / f"mission_{name}.jsonl", trace.to_jsonl()))
        rows.append({"name": name, "channel_width_mm": sc.channel_width, "measured_mm": trace.measured,
                     "decision": trace.decision.value, "actuation_limited": trace.actuation_limited,
                     "stalled": trace.stalled,
                     "end_time_s": trace.events[-1].t})
    files.append(_write(out / "mission_summary.json", _dump({"seed": seed, "scenarios": rows})))
    for r in rows:
        print(f"{r['name']:>6}  channel={r['channel_width_mm']:g} mm  {r['decision']}", file=sys.stderr)
    return files


def cmd_design(args, doc) -> list:
    d = doc.get("design")
    if not d:
        raise ConfigError("design section with r_target, lb_min_req and lb_max_req is required")
    d = dict(d)
    for key in ("n_circ_bounds", "n_width_bounds", "size_bounds"):
        if key in d:
            d[key] = tuple(d[key])
    try:
        target = design_search.DesignTarget(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    out = _out_dir(args, doc)
    result = design_search.search(target, seed=seed)
    data = result.to_dict()
    path = _write(out / "design.json", _dump(data))
    c = result.config
    text = (f"n_circ={c.n_circ} n_width={c.n_width} l_t={c.cell.l_t:.6f} l_u={c.cell.l_u:.6f} "
            f"b={c.cell.b:.6f} beta={math.degrees(c.cell.beta):.6f} deg\n"
            f"r_d={result.report.r_d:.6f} mm width {result.report.lb_min:.3f}-"
            f"{result.report.lb_max:.3f} mm objective={result.objective:.3e}\n")
    summary = _write(out / "design.txt", text)
    sys.stderr.write(text)
    return [path, summary]


COMMANDS = {"pattern": cmd_pattern, "analyze": cmd_analyze, "fold": cmd_fold, "sim": cmd_sim,
            "mission": cmd_mission, "design": cmd_design}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run document")
    common.add_argument("--out", metavar="DIR", help="existing output directory")
    common.add_argument("--seed", type=int, help="overrides the document seed")
    common.add_argument("--json", action="store_true", help="machine-readable report (analyze)")
    parser = argparse.ArgumentParser(prog="oriwheel",
                                     description="Variable-width origami wheel toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "fold":
            p.add_argument("--theta1", help="fold angle in rad, or 'closure'")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ORIWHEEL_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not hasattr(args, "theta1"):
        args.theta1 = None
    try:
        doc = load_config(args.config)
        if args.seed is not None:
            doc["seed"] = args.seed
        files = COMMANDS[args.command](args, doc)
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NoFeasibleDesign, Unconverged, NoClosure, CalibrationFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_RESULT
    except NumericalDivergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (InvalidParams, Infeasible, FoldInfeasible, ActuationLimit, TypeError, ValueError,
            KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
