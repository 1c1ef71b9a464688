"""CSV and SVG writers. Output bytes depend only on the input values."""

from __future__ import annotations

import math
import os
from typing import Sequence
from xml.sax.saxutils import escape

from ..errors import ValidationError
from ..explain import ImportanceReport
from ..graph import Cpdag

PALETTE = {
    "LR-coefs": "#4c72b0",
    "RF-imps": "#dd8452",
    "RF-Shap": "#55a868",
    "NN-Shap": "#c44e52",
    "bi-corrs": "#8172b3",
}
_EXTRA = ("#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd")


def _write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def reports_csv(reports: Sequence[ImportanceReport]) -> str:
    out = "method,predictor,raw,normalized\n"
    for rep in reports:
        out += rep.to_csv(header=False)
    return out


def emit_csv(report_like, path):
    """Write reports (one or a list) or anything with ``to_csv()`` to ``path``."""
    if isinstance(report_like, ImportanceReport):
        text = reports_csv([report_like])
    elif isinstance(report_like, (list, tuple)):
        text = reports_csv(report_like)
    elif isinstance(report_like, str):
        text = report_like
    else:
        text = report_like.to_csv()
    return _write(path, text)


def _shared_predictors(reports):
    if not reports:
        raise ValidationError("nothing to plot")
    preds = reports[0].predictors
    for r in reports[1:]:
        if set(r.predictors) != set(preds):
            raise ValidationError("reports must share one predictor set")
    return preds


def bar_chart_svg(reports: Sequence[ImportanceReport], title: str = "") -> str:
    """Grouped bars: one group per predictor, one bar per method (normalized)."""
    reports = list(reports)
    preds = _shared_predictors(reports)
    n_m = len(reports)
    bar_w = 12
    gap = 14
    group_w = n_m * bar_w + gap
    left, top, plot_h, bottom = 50, 40, 220, 40
    legend_w = 110
    width = left + len(preds) * group_w + 20 + legend_w
    height = top + plot_h + bottom
    base = top + plot_h
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{left}" y="20" font-size="13">{escape(title)}</text>')
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = base - tick * plot_h
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + len(preds) * group_w}" '
                   f'y2="{y:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{tick:.2f}</text>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{base}" x2="{left + len(preds) * group_w}" '
               f'y2="{base}" stroke="black"/>')
    colors = []
    for i, rep in enumerate(reports):
        colors.append(PALETTE.get(rep.method, _EXTRA[i % len(_EXTRA)]))
    for g, p in enumerate(preds):
        x0 = left + g * group_w + gap / 2
        for i, rep in enumerate(reports):
            v = rep.normalized[p]
            h = max(0.0, min(1.0, v)) * plot_h
            out.append(f'<rect class="bar" x="{x0 + i * bar_w:.2f}" y="{base - h:.2f}" '
                       f'width="{bar_w - 1}" height="{h:.2f}" fill="{colors[i]}">'
                       f'<title>{escape(rep.method)} {escape(p)}: {v:.4f}</title></rect>')
        out.append(f'<text x="{x0 + n_m * bar_w / 2:.2f}" y="{base + 16}" '
                   f'text-anchor="middle">{escape(p)}</text>')
    lx = left + len(preds) * group_w + 20
    for i, rep in enumerate(reports):
        y = top + i * 18
        out.append(f'<g class="legend"><rect x="{lx}" y="{y}" width="12" height="12" '
                   f'fill="{colors[i]}"/><text x="{lx + 18}" y="{y + 10}">'
                   f'{escape(rep.method)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(reports: Sequence[ImportanceReport], path, title: str = ""):
    return _write(path, bar_chart_svg(reports, title))


def graph_svg(g: Cpdag, title: str = "") -> str:
    """Nodes on a circle in canonical order; arrows for directed edges."""
    n = len(g.nodes)
    size, r_layout, r_node = 360, 130, 16
    cx = cy = size / 2 + 10
    pos = {}
    for i, name in enumerate(g.nodes):
        ang = -math.pi / 2 + 2 * math.pi * i / max(n, 1)
        pos[name] = (cx + r_layout * math.cos(ang), cy + r_layout * math.sin(ang))
    h = size + 30
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 20}" height="{h}" '
           f'viewBox="0 0 {size + 20} {h}" font-family="sans-serif" font-size="12">',
           '<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="7" '
           'markerHeight="7" orient="auto"><path d="M0,0 L10,5 L0,10 z"/></marker></defs>',
           f'<rect x="0" y="0" width="{size + 20}" height="{h}" fill="white"/>']
    if title:
        out.append(f'<text x="10" y="18" font-size="13">{escape(title)}</text>')
    for line in g.lines():
        directed = " -> " in line
        a, b = line.split(" -> " if directed else " -- ")
        (x1, y1), (x2, y2) = pos[a], pos[b]
        d = math.hypot(x2 - x1, y2 - y1) or 1.0
        ux, uy = (x2 - x1) / d, (y2 - y1) / d
        sx, sy = x1 + ux * r_node, y1 + uy * r_node
        ex, ey = x2 - ux * r_node, y2 - uy * r_node
        marker = ' marker-end="url(#arrow)"' if directed else ""
        out.append(f'<line class="edge" x1="{sx:.2f}" y1="{sy:.2f}" x2="{ex:.2f}" y2="{ey:.2f}" '
                   f'stroke="black"{marker}><title>{escape(line)}</title></line>')
    for name in g.nodes:
        x, y = pos[name]
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r_node}" fill="#f0f0f0" '
                   f'stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{y + 4:.2f}" text-anchor="middle">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_graph_svg(g: Cpdag, path, title: str = ""):
    return _write(path, graph_svg(g, title))
