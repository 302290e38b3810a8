"""SVG export and matplotlib figures for layouts, EO traces and bench reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from .squeeze import GeometricPlacement

__all__ = ["to_svg", "write_svg", "plot_layout", "plot_trace", "plot_bench"]

_PALETTE = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f"]


def _fmt(v: float) -> str:
    return repr(float(v))


def to_svg(g: GeometricPlacement, gap: float | None = None) -> str:
    """One panel per layer, side by side.

    Rectangle attributes carry the layout coordinates verbatim; each layer
    group flips the y axis so the origin sits bottom-left as in the layout.
    """
    width = max((b.right for b in g.boxes), default=1.0)
    height = max((b.top for b in g.boxes), default=1.0)
    width = max(width, g.rally.px, 1e-9)
    height = max(height, g.rally.py, 1e-9)
    gap = 0.05 * width if gap is None else gap
    font = max(width, height) / 40
    total_w = g.layers * width + (g.layers + 1) * gap
    total_h = height + 2 * gap + font * 2
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_fmt(total_w)} {_fmt(total_h)}" '
        f'width="{_fmt(total_w)}" height="{_fmt(total_h)}">',
    ]
    for layer in range(g.layers):
        ox = gap + layer * (width + gap)
        out.append(
            f'<g id="layer-{layer}" class="layer" data-layer="{layer}" '
            f'transform="translate({_fmt(ox)},{_fmt(height + gap + font * 2)}) scale(1,-1)">'
        )
        out.append(
            f'<rect class="die" x="0" y="0" width="{_fmt(width)}" height="{_fmt(height)}" '
            f'fill="none" stroke="#999" stroke-dasharray="4"/>'
        )
        for k, b in enumerate(g.boxes):
            if b.layer != layer:
                continue
            colour = _PALETTE[k % len(_PALETTE)]
            out.append(
                f'<rect class="component" data-name="{escape(b.name)}" x="{_fmt(b.x)}" y="{_fmt(b.y)}" '
                f'width="{_fmt(b.width)}" height="{_fmt(b.height)}" fill="{colour}" fill-opacity="0.6" stroke="#222"/>'
            )
            cx, cy = b.x + b.width / 2, b.y + b.height / 2
            out.append(
                f'<text transform="scale(1,-1)" x="{_fmt(cx)}" y="{_fmt(-cy)}" font-size="{_fmt(font)}" '
                f'text-anchor="middle" dominant-baseline="middle">{escape(b.name)}</text>'
            )
        out.append(
            f'<text transform="scale(1,-1)" x="0" y="{_fmt(-(height + font * 0.5))}" '
            f'font-size="{_fmt(font * 1.2)}">layer {layer}</text>'
        )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(g: GeometricPlacement, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(to_svg(g))
    return path


def plot_layout(g: GeometricPlacement, path: str | Path, title: str = "") -> Path:
    fig = Figure(figsize=(3.2 * max(g.layers, 1), 3.4))
    axes = fig.subplots(1, max(g.layers, 1), squeeze=False)[0]
    xmax = max((b.right for b in g.boxes), default=1.0)
    ymax = max((b.top for b in g.boxes), default=1.0)
    for layer, ax in enumerate(axes):
        for k, b in enumerate(g.boxes):
            if b.layer != layer:
                continue
            ax.add_patch(
                Rectangle((b.x, b.y), b.width, b.height, facecolor=_PALETTE[k % len(_PALETTE)],
                          alpha=0.6, edgecolor="k", linewidth=0.6)
            )
            ax.text(b.x + b.width / 2, b.y + b.height / 2, b.name, ha="center", va="center", fontsize=6)
        ax.plot([g.rally.px], [g.rally.py], "k+", markersize=8)
        ax.set_xlim(0, xmax)
        ax.set_ylim(0, ymax)
        ax.set_aspect("equal")
        ax.set_title(f"layer {layer}", fontsize=9)
        ax.tick_params(labelsize=6)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return Path(path)


def plot_trace(trace: Sequence[tuple[int, float, float]], path: str | Path, m: int | None = None) -> Path:
    fig = Figure(figsize=(5, 3))
    ax = fig.subplots()
    its = [t[0] for t in trace]
    ax.plot(its, [t[1] for t in trace], lw=0.6, label="current")
    ax.plot(its, [t[2] for t in trace], lw=1.2, label="best")
    if m is not None:
        ax.axhline(m, color="k", ls=":", lw=0.8, label="optimum")
    ax.set_xlabel("iteration")
    ax.set_ylabel("total fitness")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return Path(path)


def plot_bench(rows: Sequence[dict], path: str | Path) -> Path:
    """Grouped bars: best and mean run against the published 3D and 2D numbers."""
    fig = Figure(figsize=(6, 3.4))
    ax = fig.subplots()
    names = [r["name"] for r in rows]
    series = [
        ("best", "wirelength_best"),
        ("mean", "wirelength_mean"),
        ("reference 3D", "reference_wirelength"),
        ("reference 2D", "reference_2d"),
    ]
    width = 0.8 / len(series)
    for k, (label, key) in enumerate(series):
        xs = [i + (k - (len(series) - 1) / 2) * width for i in range(len(rows))]
        ax.bar(xs, [r.get(key) or 0 for r in rows], width, label=label)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(names)
    ax.set_ylabel("wire-length (um)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return Path(path)
