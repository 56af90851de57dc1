"""Static SVG figures: summary-function panels for estimate, theory and envelope files.

Estimate tables give two panels: the empty-space functional (solid) with the
nearest-neighbour functional (dashed), and ``K_inhom`` (solid) with
``pi t^2`` (dashed). Theory curves and envelopes go into a ``J`` panel.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .estimate import ENVELOPE_HEADER, TABLE_HEADER, read_table

__all__ = ["emit_plot", "read_curve_file"]

THEORY_HEADER = "t,value,stderr"
PALETTE = ["#1f4e79", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e", "#2e4053"]
PANEL_W, PANEL_H = 360, 300
MARGIN = dict(left=56, right=16, top=28, bottom=44)


class _Series:
    def __init__(self, t, y, label, color, dash=None, width=1.6):
        self.t = np.asarray(t, dtype=float)
        self.y = np.ma.asarray(y)
        self.label, self.color, self.dash, self.width = label, color, dash, width

    def segments(self):
        mask = np.ma.getmaskarray(self.y) | ~np.isfinite(np.ma.filled(self.y, np.nan))
        seg = []
        for ti, yi, m in zip(self.t, np.ma.filled(self.y, np.nan), mask):
            if m:
                if seg:
                    yield seg
                seg = []
            else:
                seg.append((ti, yi))
        if seg:
            yield seg


def _read_rows(path):
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError(f"{path}: table has no rows")
    return lines[0].strip(), [ln.split(",") for ln in lines[1:]]


def _col(rows, i):
    vals = [r[i].strip() for r in rows]
    mask = np.array([v == "NA" for v in vals])
    return np.ma.masked_array([0.0 if m else float(v) for v, m in zip(vals, mask)], mask=mask)


def read_curve_file(path):
    """Return ``(kind, payload)`` for an estimate, theory or envelope file."""
    header, rows = _read_rows(path)
    if header == TABLE_HEADER:
        return "estimate", read_table(path)
    if header == THEORY_HEADER:
        return "theory", (np.array([float(r[0]) for r in rows]), _col(rows, 1), _col(rows, 2))
    if header == ENVELOPE_HEADER:
        names = header.split(",")
        cols = {n: _col(rows, i) for i, n in enumerate(names)}
        return "envelope", cols
    raise ValueError(f"{path}: unrecognised table header {header!r}")


def _panel_svg(x0, title, series, notes=()):
    ml, mr, mt, mb = MARGIN["left"], MARGIN["right"], MARGIN["top"], MARGIN["bottom"]
    pw, ph = PANEL_W - ml - mr, PANEL_H - mt - mb
    ts = np.concatenate([s.t for s in series])
    ys = np.concatenate([np.ma.compressed(s.y) for s in series] or [np.zeros(1)])
    ys = ys[np.isfinite(ys)]
    tmin, tmax = float(ts.min()), float(ts.max())
    ymin, ymax = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if tmax <= tmin:
        tmax = tmin + 1.0
    if ymax - ymin < 1e-12:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad

    def sx(t):
        return x0 + ml + (t - tmin) / (tmax - tmin) * pw

    def sy(y):
        return mt + (ymax - y) / (ymax - ymin) * ph

    out = [f'<g class="panel">',
           f'<rect x="{x0 + ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444" stroke-width="1"/>',
           f'<text x="{x0 + ml + pw / 2:.1f}" y="{mt - 10}" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<text x="{x0 + ml + pw / 2:.1f}" y="{PANEL_H - 8}" text-anchor="middle" font-size="12">t</text>']
    for f in np.linspace(0, 1, 5):
        tv = tmin + f * (tmax - tmin)
        yv = ymin + f * (ymax - ymin)
        out.append(f'<text x="{sx(tv):.1f}" y="{mt + ph + 16}" text-anchor="middle" font-size="10">{tv:.3g}</text>')
        out.append(f'<text x="{x0 + ml - 6}" y="{sy(yv) + 3:.1f}" text-anchor="end" font-size="10">{yv:.3g}</text>')
    for s in series:
        dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
        for seg in s.segments():
            pts = " ".join(f"{sx(t):.2f},{sy(y):.2f}" for t, y in seg)
            out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" stroke-width="{s.width}"{dash}/>')
    ly = mt + 14
    for s in series:
        dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
        lx = x0 + ml + 8
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{s.color}" stroke-width="{s.width}"{dash}/>')
        out.append(f'<text x="{lx + 28}" y="{ly}" font-size="10">{escape(s.label)}</text>')
        ly += 14
    for note in notes:
        out.append(f'<text x="{x0 + ml + 8}" y="{ly}" font-size="10" fill="#333">{escape(note)}</text>')
        ly += 14
    out.append("</g>")
    return out


def emit_plot(paths, out) -> None:
    """Render one or more table files to a self-contained SVG at ``out``."""
    paths = list(paths)
    if not paths:
        raise ValueError("emit_plot needs at least one table file")
    comp, kpanel, jpanel, notes = [], [], [], []
    k_ref_t = None
    for i, p in enumerate(paths):
        kind, data = read_curve_file(p)
        color = PALETTE[i % len(PALETTE)]
        name = Path(p).stem
        if kind == "estimate":
            if len(data) == 0:
                raise ValueError(f"{p}: empty table")
            comp.append(_Series(data.t, data.denom, f"{name} empty-space", color))
            comp.append(_Series(data.t, data.num, f"{name} nearest-neighbour", color, dash="6,4"))
            gap = np.ma.abs(data.num - data.denom).max()
            if gap is not np.ma.masked:
                notes.append(f"{name}: max |num - denom| = {float(gap):.4f}")
            kpanel.append(_Series(data.t, data.k, f"{name} K_inhom", color))
            k_ref_t = data.t if k_ref_t is None else np.union1d(k_ref_t, data.t)
        elif kind == "theory":
            t, v, _ = data
            jpanel.append(_Series(t, v, f"{name}", color))
        else:
            t = np.ma.filled(data["t"], np.nan)
            jpanel.append(_Series(t, data["j_lo"], f"{name} J lo", "#888", dash="3,3", width=1.0))
            jpanel.append(_Series(t, data["j_hi"], f"{name} J hi", "#888", dash="3,3", width=1.0))
            jpanel.append(_Series(t, data["j_mean"], f"{name} J mean", color))
    panels = []
    if comp:
        panels.append(("empty-space / nearest-neighbour", comp, notes))
        kpanel.append(_Series(k_ref_t, math.pi * k_ref_t**2, "pi t^2", "#000", dash="6,4"))
        panels.append(("K_inhom", kpanel, ()))
    if jpanel:
        panels.append(("J_inhom", jpanel, ()))
    width = PANEL_W * len(panels)
    body = []
    for idx, (title, series, nts) in enumerate(panels):
        body.extend(_panel_svg(idx * PANEL_W, title, series, nts))
    svg = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" '
           f'viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif">',
           f'<rect width="{width}" height="{PANEL_H}" fill="white"/>', *body, "</svg>"]
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(svg) + "\n")
