"""Self-contained SVG rendering of tax sweeps (no plotting dependency).

Output is deterministic: fixed canvas, fixed 2-decimal coordinates, ``\\n``
line endings.
"""

from __future__ import annotations

import math
from typing import Sequence

from .coordination import SweepRow

_WIDTH = 640
_HEIGHT = 420
_MARGIN_LEFT = 64
_MARGIN_RIGHT = 32
_MARGIN_TOP = 48
_MARGIN_BOTTOM = 56


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def tax_sweep_svg(
    rows: Sequence[SweepRow],
    critical: float | None = None,
    title: str = "Status-quo probability vs. tax",
) -> str:
    """An SVG line chart of equilibrium probability against the tax.

    Finite-tax rows form the line; a deletion row, if present, is drawn as an
    open marker at the right edge at p = 0.  ``critical`` adds a dashed
    vertical at the tax where the equilibrium crosses one half, paired with a
    dashed horizontal at p = 0.5.
    """
    finite = [row for row in rows if not row.is_deletion]
    deletion = [row for row in rows if row.is_deletion]
    if not finite and not deletion:
        raise ValueError("nothing to plot")

    xs = [row.t for row in finite]
    x_max = max(xs) if xs else 1.0
    if critical is not None and critical > 0:
        x_max = max(x_max, critical)
    if x_max <= 0.0:
        x_max = 1.0

    plot_left = _MARGIN_LEFT
    plot_right = _WIDTH - _MARGIN_RIGHT
    plot_top = _MARGIN_TOP
    plot_bottom = _HEIGHT - _MARGIN_BOTTOM

    def px(t: float) -> float:
        return plot_left + (t / x_max) * (plot_right - plot_left)

    def py(p: float) -> float:
        return plot_bottom - p * (plot_bottom - plot_top)

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">'
    )
    out.append('<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>')
    out.append(
        f'<text x="{_WIDTH / 2:.2f}" y="28" text-anchor="middle" '
        f'font-size="16" font-family="sans-serif">{_escape(title)}</text>'
    )

    # Axes and ticks.
    out.append(
        f'<line x1="{plot_left}" y1="{plot_bottom}" x2="{plot_right}" '
        f'y2="{plot_bottom}" stroke="#000000" stroke-width="1.5"/>'
    )
    out.append(
        f'<line x1="{plot_left}" y1="{plot_top}" x2="{plot_left}" '
        f'y2="{plot_bottom}" stroke="#000000" stroke-width="1.5"/>'
    )
    for k in range(6):
        p = k / 5.0
        y = py(p)
        out.append(
            f'<line x1="{plot_left - 4}" y1="{y:.2f}" x2="{plot_left}" y2="{y:.2f}" '
            f'stroke="#000000" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{plot_left - 8}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{p:.1f}</text>'
        )
    for k in range(6):
        t = x_max * k / 5.0
        x = px(t)
        out.append(
            f'<line x1="{x:.2f}" y1="{plot_bottom}" x2="{x:.2f}" '
            f'y2="{plot_bottom + 4}" stroke="#000000" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{x:.2f}" y="{plot_bottom + 18}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{t:.2f}</text>'
        )
    out.append(
        f'<text x="{(plot_left + plot_right) / 2:.2f}" y="{_HEIGHT - 14}" '
        f'text-anchor="middle" font-size="13" font-family="sans-serif">t</text>'
    )
    out.append(
        f'<text x="18" y="{(plot_top + plot_bottom) / 2:.2f}" text-anchor="middle" '
        f'font-size="13" font-family="sans-serif" '
        f'transform="rotate(-90 18 {(plot_top + plot_bottom) / 2:.2f})">p_t</text>'
    )

    # Critical-tax guides.
    if critical is not None and 0.0 <= critical <= x_max:
        x = px(critical)
        out.append(
            f'<line x1="{x:.2f}" y1="{plot_top}" x2="{x:.2f}" y2="{plot_bottom}" '
            f'stroke="#888888" stroke-width="1" stroke-dasharray="5,4"/>'
        )
        out.append(
            f'<line x1="{plot_left}" y1="{py(0.5):.2f}" x2="{x:.2f}" y2="{py(0.5):.2f}" '
            f'stroke="#888888" stroke-width="1" stroke-dasharray="5,4"/>'
        )
        out.append(
            f'<text x="{x:.2f}" y="{plot_bottom + 32}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">critical tax</text>'
        )

    # The sweep line and points.
    if finite:
        points = " ".join(f"{px(row.t):.2f},{py(row.p):.2f}" for row in finite)
        out.append(
            f'<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{points}"/>'
        )
        for row in finite:
            out.append(
                f'<circle cx="{px(row.t):.2f}" cy="{py(row.p):.2f}" r="3" fill="#1f77b4"/>'
            )
    if deletion:
        out.append(
            f'<circle cx="{plot_right:.2f}" cy="{py(0.0):.2f}" r="4" fill="none" '
            f'stroke="#d62728" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{plot_right:.2f}" y="{py(0.0) - 8:.2f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif" fill="#d62728">deletion: p = 0</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"
