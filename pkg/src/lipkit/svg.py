"""Minimal static SVG charts (no renderer dependency, deterministic output)."""

from __future__ import annotations

from html import escape
from typing import Mapping, Sequence

W, H = 640, 400
PAD = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _scale(lo: float, hi: float, a: float, b: float):
    if hi == lo:
        hi = lo + 1.0
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _frame(title: str, xlabel: str, ylabel: str, xlim, ylim) -> list[str]:
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W // 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<text x="{W // 2}" y="{H - 18}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="16" y="{H // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {H // 2})">{escape(ylabel)}</text>',
        f'<text x="{PAD}" y="{H - PAD + 16}" font-size="10" text-anchor="middle">{xlim[0]:.4g}</text>',
        f'<text x="{W - PAD}" y="{H - PAD + 16}" font-size="10" text-anchor="middle">{xlim[1]:.4g}</text>',
        f'<text x="{PAD - 6}" y="{H - PAD}" font-size="10" text-anchor="end">{ylim[0]:.4g}</text>',
        f'<text x="{PAD - 6}" y="{PAD + 4}" font-size="10" text-anchor="end">{ylim[1]:.4g}</text>',
    ]
    return out


def line_chart(series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
               title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    xs = [x for s in series.values() for x in s[0]]
    ys = [y for s in series.values() for y in s[1]]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    xlim, ylim = (min(xs), max(xs)), (min(ys), max(ys))
    sx = _scale(*xlim, PAD, W - PAD)
    sy = _scale(*ylim, H - PAD, PAD)
    out = _frame(title, xlabel, ylabel, xlim, ylim)
    for k, (name, (x, y)) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        for a, b in zip(x, y):
            out.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="3" fill="{color}"/>')
        out.append(f'<text x="{W - PAD - 4}" y="{PAD + 14 * (k + 1)}" text-anchor="end" '
                   f'font-size="11" fill="{color}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter(points: Sequence[tuple[float, float]], labels: Sequence[str],
            title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    xs = [p[0] for p in points] or [0.0, 1.0]
    ys = [p[1] for p in points] or [0.0, 1.0]
    xlim, ylim = (min(xs), max(xs)), (min(ys), max(ys))
    sx = _scale(*xlim, PAD, W - PAD)
    sy = _scale(*ylim, H - PAD, PAD)
    out = _frame(title, xlabel, ylabel, xlim, ylim)
    palette = {lab: COLORS[k % len(COLORS)] for k, lab in enumerate(sorted(set(labels)))}
    for (a, b), lab in zip(points, labels):
        out.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="4" fill="{palette[lab]}"/>')
    for k, (lab, color) in enumerate(palette.items()):
        out.append(f'<text x="{W - PAD - 4}" y="{PAD + 14 * (k + 1)}" text-anchor="end" '
                   f'font-size="11" fill="{color}">{escape(lab)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
