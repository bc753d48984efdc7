"""Deterministic SVG pictures of instances and solutions.

Byte-for-byte reproducible: coordinates are formatted from exact rationals by
a fixed rule, shapes are drawn in instance order, and nothing depends on
ambient state.
"""

from __future__ import annotations

from fractions import Fraction

from .geometry import Coord, Instance, KShape, Solution

_SCALE = 10**6


def dec(value: Coord) -> str:
    """Fixed decimal rendering (<= 6 places, half-up, trailing zeros trimmed)."""
    v = Fraction(value)
    sign = "-" if v < 0 else ""
    v = abs(v)
    scaled = v * _SCALE
    whole = scaled.numerator // scaled.denominator
    if 2 * (scaled.numerator % scaled.denominator) >= scaled.denominator:
        whole += 1
    head, tail = divmod(whole, _SCALE)
    if tail == 0:
        return f"{sign}{head}"
    frac = f"{tail:06d}".rstrip("0")
    return f"{sign}{head}.{frac}"


def shape_outline(shape: KShape) -> list[tuple[Coord, Coord]]:
    """Boundary polygon of the stacked-rect union, counterclockwise from the
    bottom-left corner."""
    rects = shape.rects
    pts: list[tuple[Coord, Coord]] = [(rects[0].xl, rects[0].yb), (rects[0].xr, rects[0].yb)]
    for i, r in enumerate(rects):
        pts.append((r.xr, r.yt))
        if i + 1 < len(rects):
            pts.append((rects[i + 1].xr, r.yt))
    pts.append((rects[-1].xl, rects[-1].yt))
    for i in range(len(rects) - 1, 0, -1):
        pts.append((rects[i].xl, rects[i].yb))
        pts.append((rects[i - 1].xl, rects[i].yb))
    deduped: list[tuple[Coord, Coord]] = []
    for p in pts:
        if not deduped or deduped[-1] != p:
            deduped.append(p)
    if len(deduped) > 1 and deduped[0] == deduped[-1]:
        deduped.pop()

    def collinear(a, b, c) -> bool:
        return (a[0] == b[0] == c[0]) or (a[1] == b[1] == c[1])

    out: list[tuple[Coord, Coord]] = []
    m = len(deduped)
    for i, p in enumerate(deduped):
        if m >= 3 and collinear(deduped[i - 1], p, deduped[(i + 1) % m]):
            continue
        out.append(p)
    return out


_FILL = "#7aa6c2"
_STROKE = "#1f3042"
_SEGMENT = "#c23b22"


def render_svg(inst: Instance, sol: Solution | None = None) -> str:
    """Shapes as filled rectilinear polygons, solution segments as red lines."""
    if inst.shapes:
        x0 = min(s.x_min for s in inst.shapes)
        x1 = max(s.x_max for s in inst.shapes)
        y0 = min(s.y_min for s in inst.shapes)
        y1 = max(s.y_max for s in inst.shapes)
    else:
        x0 = y0 = Fraction(0)
        x1 = y1 = Fraction(1)
    width = x1 - x0 if x1 > x0 else Fraction(1)
    height = y1 - y0 if y1 > y0 else Fraction(1)
    pad_x = width * Fraction(1, 20)
    pad_y = height * Fraction(1, 20)

    def fy(y: Coord) -> Coord:
        return y1 - y  # SVG y grows downward

    stroke_w = max(width, height) * Fraction(1, 200)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        (
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{dec(x0 - pad_x)} '
            f'{dec(-pad_y)} {dec(width + 2 * pad_x)} {dec(height + 2 * pad_y)}">'
        ),
    ]
    for shape in inst.shapes:
        pts = " ".join(f"{dec(x)},{dec(fy(y))}" for x, y in shape_outline(shape))
        lines.append(
            f'<polygon points="{pts}" fill="{_FILL}" stroke="{_STROKE}" '
            f'stroke-width="{dec(stroke_w)}" fill-opacity="0.6"/>'
        )
    if sol is not None:
        for seg in sol.segments:
            lines.append(
                f'<line x1="{dec(seg.xl)}" y1="{dec(fy(seg.y))}" x2="{dec(seg.xr)}" '
                f'y2="{dec(fy(seg.y))}" stroke="{_SEGMENT}" stroke-width="{dec(2 * stroke_w)}" '
                f'stroke-linecap="round"/>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
