"""Minimal deterministic SVG emission: accuracy-vs-SNR polylines, grouped
open-set comparison bars, and 2-D feature scatters. No timestamps, no
external plotting dependencies, byte-stable output for identical inputs."""

from __future__ import annotations

from pathlib import Path

W, H = 640, 420
MARGIN = 60
PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
    "#aec7e8",
)


def _svg(body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">\n<rect width="{W}" height="{H}" fill="white"/>'
    )
    return head + "\n" + "\n".join(body) + "\n</svg>\n"


def _axes(x_label: str, y_label: str) -> list[str]:
    x0, y0, x1, y1 = MARGIN, H - MARGIN, W - MARGIN, MARGIN
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2:.0f}" y="{H - 15}" text-anchor="middle" font-size="14">{x_label}</text>',
        f'<text x="18" y="{(y0 + y1) / 2:.0f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2:.0f})">{y_label}</text>',
    ]


def _scale(value: float, lo: float, hi: float, out_lo: float, out_hi: float) -> float:
    if hi == lo:
        return (out_lo + out_hi) / 2.0
    return out_lo + (value - lo) * (out_hi - out_lo) / (hi - lo)


def render_accuracy_curve(rows, path) -> None:
    """Polyline of accuracy against SNR; one vertex per table row."""
    rows = list(rows)
    if not rows:
        raise ValueError("empty per-SNR table, nothing to plot")
    snrs = [r.snr_db for r in rows]
    lo, hi = min(snrs), max(snrs)
    body = _axes("SNR (dB)", "accuracy")
    pts = []
    for r in rows:
        x = _scale(r.snr_db, lo, hi, MARGIN, W - MARGIN)
        y = _scale(r.accuracy, 0.0, 1.0, H - MARGIN, MARGIN)
        pts.append(f"{x:.2f},{y:.2f}")
        body.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{PALETTE[0]}"/>')
    body.append(
        f'<polyline points="{" ".join(pts)}" fill="none" stroke="{PALETTE[0]}" stroke-width="2"/>'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = _scale(frac, 0.0, 1.0, H - MARGIN, MARGIN)
        body.append(
            f'<text x="{MARGIN - 8}" y="{y:.2f}" text-anchor="end" font-size="11">{frac:g}</text>'
        )
    for s in snrs:
        x = _scale(s, lo, hi, MARGIN, W - MARGIN)
        body.append(
            f'<text x="{x:.2f}" y="{H - MARGIN + 16}" text-anchor="middle" font-size="11">{s:g}</text>'
        )
    Path(path).write_text(_svg(body))


def render_bars(rows, path) -> None:
    """Grouped bars: rows of (scenario, mode, accuracy), one bar each."""
    rows = list(rows)
    if not rows:
        raise ValueError("empty comparison table, nothing to plot")
    scenarios = list(dict.fromkeys(r[0] for r in rows))
    modes = list(dict.fromkeys(r[1] for r in rows))
    body = _axes("scenario", "accuracy")
    span = (W - 2 * MARGIN) / len(scenarios)
    bar_w = span * 0.8 / max(len(modes), 1)
    for si, sc in enumerate(scenarios):
        base = MARGIN + si * span + span * 0.1
        for mi, mode in enumerate(modes):
            acc = next((r[2] for r in rows if r[0] == sc and r[1] == mode), None)
            if acc is None:
                continue
            x = base + mi * bar_w
            y = _scale(acc, 0.0, 1.0, H - MARGIN, MARGIN)
            body.append(
                f'<rect class="bar" x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
                f'height="{H - MARGIN - y:.2f}" fill="{PALETTE[mi % len(PALETTE)]}"/>'
            )
        body.append(
            f'<text x="{base + span * 0.4:.2f}" y="{H - MARGIN + 16}" '
            f'text-anchor="middle" font-size="11">{sc}</text>'
        )
    for mi, mode in enumerate(modes):
        y = MARGIN + 16 * mi
        body.append(
            f'<rect x="{W - MARGIN - 90}" y="{y - 9}" width="10" height="10" '
            f'fill="{PALETTE[mi % len(PALETTE)]}"/>'
        )
        body.append(f'<text x="{W - MARGIN - 75}" y="{y}" font-size="11">{mode}</text>')
    Path(path).write_text(_svg(body))


def render_scatter(points, path) -> None:
    """2-D feature scatter colored per true class; points are (x, y, true, pred)."""
    points = list(points)
    if not points:
        raise ValueError("empty feature table, nothing to plot")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    lo_x, hi_x = min(xs), max(xs)
    lo_y, hi_y = min(ys), max(ys)
    classes = sorted({p[2] for p in points})
    color = {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(classes)}
    body = _axes("feature 1", "feature 2")
    for x, y, true, _pred in points:
        px = _scale(x, lo_x, hi_x, MARGIN, W - MARGIN)
        py = _scale(y, lo_y, hi_y, H - MARGIN, MARGIN)
        body.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2" fill="{color[true]}" fill-opacity="0.6"/>')
    for i, c in enumerate(classes):
        y = MARGIN + 16 * i
        body.append(f'<rect x="{W - MARGIN - 90}" y="{y - 9}" width="10" height="10" fill="{color[c]}"/>')
        body.append(f'<text x="{W - MARGIN - 75}" y="{y}" font-size="11">{c}</text>')
    Path(path).write_text(_svg(body))
