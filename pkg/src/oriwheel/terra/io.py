"""Trajectory files: CSV time series and an SVG sinkage-versus-travel line plot."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import IoError

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _target(path) -> Path:
    path = Path(path)
    if not path.parent.is_dir():
        raise IoError(f"output directory {path.parent} does not exist")
    return path


def write_trajectory_csv(traj, path) -> Path:
    path = _target(path)
    try:
        path.write_text(traj.to_csv(), encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return path


def _nice_step(span: float) -> float:
    raw = span / 5.0
    mag = 10.0 ** np.floor(np.log10(raw))
    for m in (1.0, 2.0, 5.0, 10.0):
        if m * mag >= raw:
            return m * mag
    return 10.0 * mag


def plot_sinkage_svg(series: dict, path, width: int = 640, height: int = 360) -> Path:
    """Plot sinkage (down) against travel for each labelled trajectory."""
    path = _target(path)
    if not series:
        raise IoError("nothing to plot")
    left, right, top, bottom = 60, 130, 20, 45
    xs = np.concatenate([t.x for t in series.values()])
    zs = np.concatenate([t.z for t in series.values()])
    x0, x1 = float(xs.min()), float(xs.max())
    z1 = float(max(zs.max(), 1.0))
    if x1 - x0 < 1e-9:
        x1 = x0 + 1.0
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(z):
        # Sinkage grows downward, matching a side view of the rut.
        return top + z / z1 * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    step = _nice_step(x1 - x0)
    for tick in np.arange(np.ceil(x0 / step) * step, x1 + 1e-9, step):
        out.append(f'<text x="{px(tick):.2f}" y="{top + ph + 15}" text-anchor="middle">{tick:g}</text>')
    zstep = _nice_step(z1)
    for tick in np.arange(0.0, z1 + 1e-9, zstep):
        out.append(f'<text x="{left - 6}" y="{py(tick) + 4:.2f}" text-anchor="end">{tick:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 8}" text-anchor="middle">travel x (mm)</text>')
    out.append(f'<text x="14" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2})">sinkage z (mm)</text>')
    for i, (label, traj) in enumerate(series.items()):
        colour = _PALETTE[i % len(_PALETTE)]
        # Thin long runs so the file stays small; endpoints are always kept.
        keep = np.unique(np.r_[np.arange(0, len(traj.x), max(1, len(traj.x) // 2000)), len(traj.x) - 1])
        pts = " ".join(f"{px(x):.2f},{py(z):.2f}" for x, z in zip(traj.x[keep], traj.z[keep]))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{pts}"/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly}">{label}</text>')
    out.append("</svg>")
    try:
        path.write_text("\n".join(out) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return path
