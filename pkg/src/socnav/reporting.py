"""Result CSVs, trace dumps and small static SVG plots.

CSV files are written with '\n' newlines and repr() floats so that a rerun of
the same manifest produces byte-identical output. Timestamps live only in the
separate metadata file.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import time

RESULT_COLUMNS = [
    "scenario",
    "mode",
    "axis",
    "value",
    "episodes",
    "sr",
    "cr",
    "tr",
    "mean_steps",
    "mean_min_clearance",
]


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def result_row(scenario, mode, axis, value, results, metrics) -> dict:
    n = len(results)
    return {
        "scenario": scenario,
        "mode": mode,
        "axis": axis,
        "value": value,
        "episodes": n,
        "sr": metrics.sr,
        "cr": metrics.cr,
        "tr": metrics.tr,
        "mean_steps": sum(r.steps_taken for r in results) / n,
        "mean_min_clearance": sum(r.min_clearance for r in results) / n,
    }


def write_results_csv(path, rows: list[dict]):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])


def write_metadata(path, manifest: dict):
    meta = dict(manifest)
    meta["written_at"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    with open(path, "w") as f:
        json.dump(meta, f, indent=2, default=str)
        f.write("\n")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        h.update(f.read())
    return h.hexdigest()


def write_trace_files(out_dir, tag, trace: dict, write_scans: bool = False):
    """Per-episode trajectory dumps: robot, agents and circle CSVs."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    def dump(name, header, rows):
        p = os.path.join(out_dir, f"{tag}_{name}.csv")
        with open(p, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        paths[name] = p

    dump("robot", ["step", "x", "y", "heading", "linear", "angular"], trace["robot"])
    dump("agents", ["step", "agent", "x", "y", "vx", "vy"], trace["agents"])
    dump("circles", ["step", "agent", "k", "cx", "cy", "radius"], trace["circles"])
    if write_scans:
        dump("scans", ["step", "beam", "range"], trace["scans"])
    return paths


# ---------------------------------------------------------------------------
# Tiny static SVG plotting (line charts and trajectory overlays)


def _svg_header(w, h):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">\n<rect width="{w}" height="{h}" fill="white"/>\n'
    )


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def write_line_plot(path, series: dict, xlabel: str, ylabel: str, title: str = ""):
    """series maps a label to a list of (x, y) pairs."""
    w, h, pad = 560, 360, 50
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    if not xs:
        raise ValueError("nothing to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(100.0, max(ys))
    if x1 == x0:
        x1 = x0 + 1.0

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (w - 2 * pad)

    def sy(y):
        return h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad)

    parts = [_svg_header(w, h)]
    parts.append(
        f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h - pad}" stroke="black"/>\n'
    )
    for i, (label, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>\n')
        for x, y in pts:
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>\n')
        parts.append(
            f'<text x="{w - pad + 4}" y="{pad + 16 * i + 10}" font-size="12" fill="{color}">{label}</text>\n'
        )
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        parts.append(
            f'<text x="{sx(xv):.1f}" y="{h - pad + 16}" font-size="11" text-anchor="middle">{xv:g}</text>\n'
        )
        parts.append(
            f'<text x="{pad - 6}" y="{sy(yv):.1f}" font-size="11" text-anchor="end">{yv:g}</text>\n'
        )
    parts.append(
        f'<text x="{w / 2}" y="{h - 10}" font-size="12" text-anchor="middle">{xlabel}</text>\n'
    )
    parts.append(
        f'<text x="14" y="{h / 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {h / 2})">{ylabel}</text>\n'
    )
    if title:
        parts.append(f'<text x="{w / 2}" y="20" font-size="14" text-anchor="middle">{title}</text>\n')
    parts.append("</svg>\n")
    with open(path, "w") as f:
        f.write("".join(parts))


def write_trajectory_plot(path, wmap, trajectories: dict, goal=None):
    """Overlay robot trajectories (label -> list of (x, y)) on the map outline."""
    scale = 24.0
    pad = 20
    w = int(wmap.width * scale) + 2 * pad
    h = int(wmap.height * scale) + 2 * pad

    def s(p):
        return (pad + p[0] * scale, h - pad - p[1] * scale)

    parts = [_svg_header(w, h)]
    x0, y0 = s((0, 0))
    x1, y1 = s((wmap.width, wmap.height))
    parts.append(
        f'<rect x="{min(x0, x1)}" y="{min(y0, y1)}" width="{abs(x1 - x0)}" height="{abs(y1 - y0)}" '
        f'fill="none" stroke="black"/>\n'
    )
    for poly in wmap.obstacles:
        coords = " ".join(f"{s(v)[0]:.1f},{s(v)[1]:.1f}" for v in poly)
        parts.append(f'<polygon points="{coords}" fill="#cccccc" stroke="black"/>\n')
    for i, (label, pts) in enumerate(trajectories.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{s(p)[0]:.1f},{s(p)[1]:.1f}" for p in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>\n')
        parts.append(f'<text x="{pad}" y="{pad + 14 * i + 12}" font-size="12" fill="{color}">{label}</text>\n')
    if goal is not None:
        gx, gy = s(goal)
        parts.append(f'<circle cx="{gx:.1f}" cy="{gy:.1f}" r="5" fill="none" stroke="green" stroke-width="2"/>\n')
    parts.append("</svg>\n")
    with open(path, "w") as f:
        f.write("".join(parts))
