"""Inline-SVG rendering of logical scenarios: entries on a circle, one arrow per car."""

from __future__ import annotations

import math

from .traffic import LogicalScenario, pattern_of

_PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
            "#e377c2", "#17becf", "#bcbd22", "#7f7f7f")


def _entry_xy(index: int, n: int, cx: float, cy: float, r: float) -> tuple[float, float]:
    theta = 2 * math.pi * index / n
    return cx + r * math.cos(theta), cy - r * math.sin(theta)


def scenario_svg(scenario: LogicalScenario, size: int = 240) -> str:
    """Standalone SVG: n labelled entry dots, one entry->exit arrow per car."""
    n = scenario.num_entries
    cx = cy = size / 2
    ring = size * 0.38
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        "<defs>",
    ]
    for i in range(len(scenario.moves)):
        color = _PALETTE[i % len(_PALETTE)]
        parts.append(
            f'<marker id="head{i}" markerWidth="7" markerHeight="7" refX="5.5" refY="2.5" '
            f'orient="auto"><path d="M0,0 L6,2.5 L0,5 z" fill="{color}"/></marker>'
        )
    parts.append("</defs>")
    parts.append(
        f'<circle cx="{cx}" cy="{cy}" r="{ring}" fill="none" stroke="#ccc" stroke-width="1"/>'
    )
    for e in range(n):
        x, y = _entry_xy(e, n, cx, cy, ring)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="#333"/>')
        lx, ly = _entry_xy(e, n, cx, cy, ring + 16)
        parts.append(
            f'<text x="{lx:.2f}" y="{ly:.2f}" font-size="11" text-anchor="middle" '
            f'dominant-baseline="middle" fill="#333">{e}</text>'
        )
    for i, move in enumerate(scenario.moves):
        color = _PALETTE[i % len(_PALETTE)]
        x1, y1 = _entry_xy(move.entry, n, cx, cy, ring * 0.92)
        exit_idx = scenario.exits[i]
        x2, y2 = _entry_xy(exit_idx, n, cx, cy, ring * 0.92)
        parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="2" marker-end="url(#head{i})"/>'
        )
    label = pattern_of(scenario).label
    parts.append(
        f'<text x="{cx}" y="{size - 6}" font-size="12" text-anchor="middle" '
        f'fill="#555">{label}</text>'
    )
    parts.append("</svg>")
    return "".join(parts)
