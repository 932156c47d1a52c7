"""Serialization: soup/moustache JSON, jump-path CSV and SVG rendering."""
from __future__ import annotations

import io
import json
import math
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .distance_process import JumpPath
from .geometry import GeometryError, Polyline
from .interlacements import Moustache, Soup, SoupItem

SOUP_FORMAT = "bri2d-soup/1"
MOUSTACHE_FORMAT = "bri2d-moustache/1"
CSV_VERSION = "v1"


def _branch_rows(pl: Polyline) -> list:
    return np.column_stack([pl.t, pl.xy]).tolist()


def _branch_from_rows(rows) -> Polyline:
    a = np.asarray(rows, dtype=float).reshape(-1, 3)
    return Polyline(a[:, 0], a[:, 1:])


def dumps_json(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def moustache_to_dict(m: Moustache) -> dict:
    return {"format": MOUSTACHE_FORMAT, "start_angle": m.start_angle, "trunc_radius": m.trunc_radius,
            "truncated_by_budget": m.truncated_by_budget,
            "branches": [_branch_rows(b) for b in m.branches]}


def moustache_from_dict(d: dict) -> Moustache:
    if d.get("format") != MOUSTACHE_FORMAT:
        raise ValueError(f"not a {MOUSTACHE_FORMAT} document")
    bp, bm = (_branch_from_rows(r) for r in d["branches"])
    return Moustache(d["start_angle"], bp, bm, d["trunc_radius"],
                     truncated_by_budget=d.get("truncated_by_budget", False))


def soup_to_dict(s: Soup) -> dict:
    """Branches are in world coordinates: [t, x, y] rows with t already in
    world time (rho^2 times frame time)."""
    items = []
    for it in s.items:
        entry = {"rho": it.rho, "xi": it.xi}
        if it.moustache is not None:
            entry["start_angle"] = it.moustache.start_angle
            entry["branches"] = [_branch_rows(b) for b in it.world_branches()]
        else:
            entry["start_angle"] = None
            entry["branches"] = []
        items.append(entry)
    return {"format": SOUP_FORMAT, "alpha": s.alpha, "b": s.b, "window": list(s.window), "items": items}


def soup_from_dict(d: dict) -> Soup:
    if d.get("format") != SOUP_FORMAT:
        raise ValueError(f"not a {SOUP_FORMAT} document")
    items = []
    for e in d["items"]:
        rho = float(e["rho"])
        m = None
        if e.get("branches"):
            frame = []
            for rows in e["branches"]:
                pl = _branch_from_rows(rows)
                frame.append(Polyline(pl.t / rho ** 2, pl.xy / rho))
            m = Moustache(e["start_angle"], frame[0], frame[1], math.nan)
        items.append(SoupItem(rho, m, float(e.get("xi", 0.0))))
    return Soup(d["alpha"], d["b"], tuple(d["window"]), tuple(items))


# --------------------------------------------------------------------- CSV

def csv_header(subcommand: str, seed: int, **params) -> str:
    extra = "".join(f" {k}={_fmt_param(v)}" for k, v in params.items())
    return f"# bri2d {subcommand} {CSV_VERSION} seed={seed}{extra}\n"


def _fmt_param(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(repr(float(x)) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def jump_path_to_csv(path: JumpPath, subcommand: str, seed: int, **params) -> str:
    """Rows (time, value) at the start and after each jump, plus a closing
    row at the horizon end when it lies past the last jump."""
    buf = io.StringIO()
    buf.write(csv_header(subcommand, seed, process=path.process, **params))
    buf.write("time,value\n")
    for t, v in zip(path.times, path.values):
        buf.write(f"{float(t)!r},{float(v)!r}\n")
    end = path.params.get("t_end")
    if end is not None and end > path.times[-1]:
        buf.write(f"{float(end)!r},{float(path.value_at(end))!r}\n")
    return buf.getvalue()


def read_jump_csv(text: str) -> tuple:
    """Parse a jump-path CSV into (header dict, times, values)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# bri2d "):
        raise ValueError("missing bri2d CSV header")
    parts = lines[0][2:].split()
    meta = {"tool": parts[0], "subcommand": parts[1], "version": parts[2]}
    for p in parts[3:]:
        k, _, v = p.partition("=")
        meta[k] = v
    if lines[1].strip() != "time,value":
        raise ValueError("unexpected CSV columns")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[2:] if ln.strip()]).reshape(-1, 2)
    return meta, data[:, 0], data[:, 1]


# --------------------------------------------------------------------- SVG

def _fmt_coord(x: float) -> str:
    return f"{x:.6f}".rstrip("0").rstrip(".") if x != 0 else "0"


def _outside_points(xy: np.ndarray) -> np.ndarray:
    """Round to 6 decimals, nudging outward any point whose rounding would
    fall inside the closed unit disk although the true point does not."""
    r = np.round(xy, 6)
    bad = np.hypot(r[:, 0], r[:, 1]) <= 1.0
    if bad.any():
        raw = np.hypot(xy[bad, 0], xy[bad, 1])
        if np.any(raw < 1.0):
            raise GeometryError("a path point lies inside the unit disk")
        scale = (1.0 + 2e-6) / raw
        r[bad] = np.round(xy[bad] * scale[:, None], 6)
    return r


def _thin(xy: np.ndarray, max_points: int) -> np.ndarray:
    if len(xy) <= max_points:
        return xy
    idx = np.unique(np.concatenate([np.linspace(0, len(xy) - 1, max_points).astype(int), [len(xy) - 1]]))
    return xy[idx]


def render_svg(branches: Sequence[np.ndarray], extent: Optional[float] = None, size: int = 800,
               max_points: int = 20000, title: str = "") -> str:
    """SVG with the viewBox centred at the origin, y pointing up, the unit
    circle drawn, and one polyline per branch."""
    pts = [_outside_points(_thin(np.asarray(b, dtype=float), max_points)) for b in branches]
    if extent is None:
        extent = max([1.0] + [float(np.abs(p).max()) for p in pts if len(p)]) * 1.05
    stroke = 2.0 * extent / size
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- bri2d {__version__} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{_fmt_coord(-extent)} {_fmt_coord(-extent)} {_fmt_coord(2 * extent)} {_fmt_coord(2 * extent)}">',
    ]
    if title:
        lines.append(f"<title>{title}</title>")
    lines.append(f'<circle cx="0" cy="0" r="1" fill="#888888" stroke="black" stroke-width="{stroke:.6g}"/>')
    for p in pts:
        coords = " ".join(f"{_fmt_coord(x)},{_fmt_coord(-y)}" for x, y in p)
        lines.append(f'<polyline fill="none" stroke="#1f4e9c" stroke-width="{stroke:.6g}" points="{coords}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def moustache_svg(m: Moustache, **kw) -> str:
    return render_svg([b.xy for b in m.branches], title="Wiener moustache", **kw)


def soup_svg(s: Soup, **kw) -> str:
    branches = [b.xy for it in s.items for b in it.world_branches()]
    return render_svg(branches, title=f"BRI(alpha={s.alpha:g}; b={s.b:g})", **kw)


def svg_polylines(text: str) -> list:
    """Path points of every polyline in an emitted SVG, in world
    coordinates (y flipped back)."""
    out = []
    for chunk in text.split('points="')[1:]:
        body = chunk.split('"', 1)[0]
        a = np.array([[float(c) for c in pair.split(",")] for pair in body.split()]).reshape(-1, 2)
        a[:, 1] = -a[:, 1]
        out.append(a)
    return out


def write_bytes(path: Optional[str], data: bytes, stdout=None) -> None:
    import sys
    if path in (None, "-"):
        (stdout or sys.stdout.buffer).write(data)
        return
    with open(path, "wb") as fh:
        fh.write(data)
