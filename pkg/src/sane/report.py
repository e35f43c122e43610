"""Trace CSV, labels CSV, summary JSON and SVG heatmap writers."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError

# ---------------------------------------------------------------------------
# trace CSV


def trace_header(dim: int) -> list[str]:
    return ["iteration", *(f"x{m + 1}" for m in range(dim)), "y", "ei", "g", "branch", "c_bar", "focus_count"]


def trace_rows(trace) -> list[list]:
    rows = []
    for r in trace.records:
        rows.append([r.iteration, *r.location, r.raw, r.ei, r.g, r.branch, r.c_bar, r.focus_count])
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_trace_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_trace_csv(path, trace) -> None:
    Path(path).write_text(format_trace_csv(trace_header(trace.dim), trace_rows(trace)))


def read_trace_csv(path) -> tuple[list[str], list[list]]:
    """Parse a trace CSV back into typed rows (round-trips byte-for-byte)."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(header):
                raise ParseError(f"{path}: line {lineno}: expected {len(header)} fields")
            row = []
            for name, cell in zip(header, raw):
                if name in ("iteration", "focus_count"):
                    row.append(int(cell))
                elif name == "branch":
                    row.append(cell)
                else:
                    row.append(None if cell == "" else float(cell))
            rows.append(row)
    return header, rows


# ---------------------------------------------------------------------------
# labels CSV


def write_labels_csv(path, locations, labels) -> None:
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*(f"x{m + 1}" for m in range(locations.shape[1])), "label"])
        for loc, lab in zip(locations, labels):
            w.writerow([repr(float(v)) for v in loc] + [lab])


def read_labels_csv(path) -> list[tuple[tuple[float, ...], str]]:
    """Rows of original-unit coordinates followed by ``good`` or ``bad``; a header row is optional."""
    out = []
    with Path(path).open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            label = row[-1].strip().lower()
            if lineno == 1 and label == "label":
                continue
            if label not in ("good", "bad"):
                raise ParseError(f"{path}: line {lineno}: label must be 'good' or 'bad', got {row[-1]!r}")
            try:
                coords = tuple(float(c) for c in row[:-1])
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: non-numeric coordinate") from None
            if not coords:
                raise ParseError(f"{path}: line {lineno}: missing coordinates")
            out.append((coords, label))
    return out


# ---------------------------------------------------------------------------
# summary JSON


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# SVG heatmaps

_STOPS = [(0.0, (68, 1, 84)), (0.25, (59, 82, 139)), (0.5, (33, 145, 140)), (0.75, (94, 201, 98)), (1.0, (253, 231, 37))]


def _color(t: float) -> str:
    t = 0.0 if not math.isfinite(t) else min(max(t, 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(_STOPS, _STOPS[1:]):
        if t <= t1:
            w = (t - t0) / (t1 - t0)
            rgb = [round(a + w * (b - a)) for a, b in zip(c0, c1)]
            return "#%02x%02x%02x" % tuple(rgb)
    return "#%02x%02x%02x" % _STOPS[-1][1]


def heatmap_svg(values, points=None, title: str = "", cell: int = 8, marks=None) -> str:
    """Render a 2-D array (``values[i, j]``, i along x, j along y) as SVG.

    ``points`` are ``(i, j)`` fractional grid positions drawn as red dots;
    ``marks`` as green dots.
    """
    values = np.asarray(values, dtype=float)
    nx, ny = values.shape
    finite = values[np.isfinite(values)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    top = 24
    w, h = nx * cell, ny * cell + top
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<text x="4" y="16" font-family="sans-serif" font-size="12">{title} [{lo:.4g}, {hi:.4g}]</text>']
    for i in range(nx):
        for j in range(ny):
            y = top + (ny - 1 - j) * cell
            out.append(f'<rect x="{i * cell}" y="{y}" width="{cell}" height="{cell}" '
                       f'fill="{_color((values[i, j] - lo) / span)}"/>')
    for pts, color in ((points, "#e41a1c"), (marks, "#4daf4a")):
        for i, j in (pts if pts is not None else []):
            cx, cy = (i + 0.5) * cell, top + (ny - 1 - j + 0.5) * cell
            out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{max(cell / 3, 1.5):.2f}" '
                       f'fill="{color}" stroke="white" stroke-width="0.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
