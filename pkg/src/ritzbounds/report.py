"""Deterministic SVG plots of Ritz value errors and bound curves.

The output is plain text assembled from fixed-precision numbers so that
identical inputs give identical bytes.  Errors are drawn on a log10 axis;
values at or below ``FLOOR`` are clamped to it and the panel says so.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Series", "Panel", "render_svg", "FLOOR"]

FLOOR = 1e-16
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
          "#8c564b", "#e377c2")
DASHES = {"solid": None, "dashed": "7,4", "dotted": "1.5,3"}
PANEL_W, PANEL_H = 560, 400
MARGIN = dict(left=70, right=20, top=40, bottom=50)


@dataclass
class Series:
    steps: np.ndarray
    values: np.ndarray
    style: str = "solid"
    color: int = 0
    label: str = ""


@dataclass
class Panel:
    title: str
    series: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def _fmt(x):
    return f"{x:.2f}"


def _esc(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def _limits(panel):
    xs, ys = [1.0], []
    for s in panel.series:
        v = np.asarray(s.values, dtype=float)
        ok = np.isfinite(v)
        if ok.any():
            xs.append(float(np.max(np.asarray(s.steps)[ok])))
            ys.extend(np.maximum(v[ok], FLOOR).tolist())
    if not ys:
        return 1.0, -16, 0
    lo = int(np.floor(np.log10(min(ys))))
    hi = int(np.ceil(np.log10(max(ys))))
    if hi <= lo:
        hi = lo + 1
    return max(xs), lo, hi


def _panel(panel, ox):
    xmax, lo, hi = _limits(panel)
    x0, x1 = ox + MARGIN["left"], ox + PANEL_W - MARGIN["right"]
    y0, y1 = PANEL_H - MARGIN["bottom"], MARGIN["top"]

    def px(x):
        return x0 + (x1 - x0) * x / xmax

    def py(v):
        return y0 + (y1 - y0) * (np.log10(max(v, FLOOR)) - lo) / (hi - lo)

    out = [f'<g font-family="sans-serif" font-size="11">',
           f'<text x="{_fmt((x0 + x1) / 2)}" y="22" text-anchor="middle" '
           f'font-size="13">{_esc(panel.title)}</text>',
           f'<rect x="{_fmt(x0)}" y="{_fmt(y1)}" width="{_fmt(x1 - x0)}" '
           f'height="{_fmt(y0 - y1)}" fill="none" stroke="#000"/>']
    step = max(1, (hi - lo + 7) // 8)
    for e in range(lo, hi + 1, step):
        y = py(10.0**e)
        out.append(f'<line x1="{_fmt(x0 - 4)}" y1="{_fmt(y)}" x2="{_fmt(x0)}" y2="{_fmt(y)}" '
                   f'stroke="#000"/>')
        out.append(f'<text x="{_fmt(x0 - 6)}" y="{_fmt(y + 4)}" text-anchor="end">1e{e}</text>')
    xt = max(1, int(10 ** np.floor(np.log10(max(xmax, 1.0)))))
    if xmax / xt < 3:
        xt = max(1, xt // 2)
    for k in range(0, int(xmax) + 1, xt):
        x = px(k)
        out.append(f'<line x1="{_fmt(x)}" y1="{_fmt(y0)}" x2="{_fmt(x)}" y2="{_fmt(y0 + 4)}" '
                   f'stroke="#000"/>')
        out.append(f'<text x="{_fmt(x)}" y="{_fmt(y0 + 16)}" text-anchor="middle">{k}</text>')
    out.append(f'<text x="{_fmt((x0 + x1) / 2)}" y="{_fmt(y0 + 34)}" '
               f'text-anchor="middle">step</text>')
    out.append(f'<text x="{_fmt(ox + 16)}" y="{_fmt((y0 + y1) / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 {_fmt(ox + 16)} {_fmt((y0 + y1) / 2)})">error</text>')
    clamped = False
    for s in panel.series:
        st = np.asarray(s.steps, dtype=float)
        v = np.asarray(s.values, dtype=float)
        ok = np.isfinite(v)
        if ok.sum() == 0:
            continue
        clamped |= bool(np.any(v[ok] <= FLOOR))
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(st[ok], v[ok]))
        dash = DASHES[s.style]
        attr = f' stroke-dasharray="{dash}"' if dash else ""
        color = COLORS[s.color % len(COLORS)]
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.3"{attr}><title>{_esc(s.label)}</title></polyline>')
    notes = list(panel.notes)
    if clamped:
        notes.append(f"errors <= {FLOOR:g} drawn at {FLOOR:g}")
    notes.append("solid: slowest run; dashed: block bound; dotted: neighbor bound")
    for k, note in enumerate(notes):
        out.append(f'<text x="{_fmt(x1 - 6)}" y="{_fmt(y1 + 14 + 13 * k)}" '
                   f'text-anchor="end" fill="#444">{_esc(note)}</text>')
    out.append("</g>")
    return out


def render_svg(panels):
    """SVG text with the panels side by side."""
    width = PANEL_W * max(1, len(panels))
    lines = ['<?xml version="1.0" encoding="UTF-8"?>',
             f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" '
             f'viewBox="0 0 {width} {PANEL_H}">',
             f'<rect width="{width}" height="{PANEL_H}" fill="#fff"/>']
    for k, panel in enumerate(panels):
        lines.extend(_panel(panel, k * PANEL_W))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
