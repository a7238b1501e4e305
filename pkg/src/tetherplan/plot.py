"""Horizontal-slice SVG of a simulated run: obstacles, plan, flown track, tether snapshots."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_PX = 40.0  # pixels per meter
_MARGIN = 20.0


def _xy(p, height):
    # x to the right, z upward on the page
    return _MARGIN + p[0] * _PX, _MARGIN + height - p[2] * _PX


def _polyline(points, height, **style):
    pts = " ".join("{:.2f},{:.2f}".format(*_xy(p, height)) for p in points)
    attrs = " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in style.items())
    return f'<polyline points="{pts}" fill="none" {attrs}/>'


def render_svg(world, plan, trajectory, layer=None, snapshots=8, title=""):
    """SVG text for the horizontal cell layer ``layer`` (default: the start layer)."""
    s = world.cell_size
    nx, ny, nz = world.dims
    if layer is None:
        layer = plan.path.states[0].cell[1]
    width, height = nx * s * _PX, nz * s * _PX
    total_w = width + 2 * _MARGIN + 240
    total_h = max(height + 2 * _MARGIN, 140 + 14 * len(trajectory.contact_events))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0f}" height="{total_h:.0f}" '
        f'font-family="sans-serif" font-size="11">',
        f"<title>{escape(title or world.name)} (layer y={layer})</title>",
        f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{width:.2f}" height="{height:.2f}" '
        f'fill="white" stroke="black"/>',
    ]
    for i, k in np.argwhere(world.occupied[:, layer, :]):
        x, y = _xy((i * s, 0.0, (k + 1) * s), height)
        out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{s * _PX:.2f}" height="{s * _PX:.2f}" fill="#555"/>')

    tethers = trajectory.tethers
    picks = set(np.linspace(0, len(tethers) - 1, max(2, snapshots)).astype(int).tolist())
    picks |= {min(step, len(tethers) - 1) for step, _, _ in trajectory.contact_events}
    for i in sorted(picks):
        out.append(_polyline(tethers[i].polyline(), height, stroke="#e89a3c", stroke_width="1",
                             stroke_opacity="0.6"))
    out.append(_polyline(plan.path.positions, height, stroke="#1f5fbf", stroke_width="2",
                         stroke_dasharray="5,3"))
    flown = [(r[2], r[3], r[4]) for r in trajectory.rows]
    out.append(_polyline(flown, height, stroke="#2a9d4a", stroke_width="1.5"))
    for step, kind, point in trajectory.contact_events:
        x, y = _xy(point, height)
        colour = "#c0392b" if kind == "push" else "#8e44ad"
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="{colour}"/>')
    ax, ay = _xy(plan.path.states[0].tether.anchor, height)
    out.append(f'<rect x="{ax - 4:.2f}" y="{ay - 4:.2f}" width="8" height="8" fill="black"/>')

    lx = width + 2 * _MARGIN
    legend = [
        ("#1f5fbf", "planned path"),
        ("#2a9d4a", "flown trajectory"),
        ("#e89a3c", "tether snapshots"),
        ("#555", "obstacles"),
    ]
    out.append(f'<g id="legend"><text x="{lx}" y="{_MARGIN + 10}" font-weight="bold">Legend</text>')
    y = _MARGIN + 28
    for colour, label in legend:
        out.append(f'<rect x="{lx}" y="{y - 9}" width="12" height="10" fill="{colour}"/>'
                   f'<text x="{lx + 18}" y="{y}">{label}</text>')
        y += 16
    out.append(f'<text x="{lx}" y="{y + 6}" font-weight="bold">Contact events</text>')
    y += 22
    if not trajectory.contact_events:
        out.append(f'<text x="{lx}" y="{y}">none</text>')
    for step, kind, point in trajectory.contact_events:
        label = f"step {step}: {kind} ({point[0]:.2f}, {point[1]:.2f}, {point[2]:.2f})"
        out.append(f'<text class="contact-event" x="{lx}" y="{y}">{escape(label)}</text>')
        y += 14
    out.append("</g></svg>")
    return "\n".join(out) + "\n"
