"""Minimal static SVG figures: resampled-statistic densities and p-value curves."""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT, PAD = 640, 360, 48
PALETTE = ("#d62a9c", "#2a9d3a", "#2a62d6", "#8a3fd1", "#e0b000", "#555555")


def _scale(v, lo, hi, a, b):
    if hi == lo:
        return (a + b) / 2
    return a + (v - lo) / (hi - lo) * (b - a)


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {HEIGHT / 2})">{ylabel}</text>',
    ]


def _tick_labels(lo, hi, y) -> list[str]:
    out = []
    for v in np.linspace(lo, hi, 5):
        x = _scale(v, lo, hi, PAD, WIDTH - PAD)
        out.append(f'<text x="{x:.1f}" y="{y}" text-anchor="middle">{v:.3g}</text>')
    return out


def density_svg(series: dict[str, tuple[np.ndarray, float, float]], bins: int = 30) -> str:
    """One histogram-density polyline per opponent.

    ``series`` maps a label to ``(resampled, observed, threshold)``. Observed
    values are drawn as dashed vertical markers, thresholds in red.
    """
    all_vals = np.concatenate([np.asarray(s[0]) for s in series.values()] +
                              [np.array([s[1] for s in series.values()])])
    lo, hi = float(all_vals.min()), float(all_vals.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    hists = {k: np.histogram(v[0], bins=edges, density=True)[0] for k, v in series.items()}
    ymax = max(float(h.max()) for h in hists.values()) or 1.0
    parts = _frame("Resampled test statistics", "statistic", "density")
    parts += _tick_labels(lo, hi, HEIGHT - PAD + 14)
    mids = (edges[:-1] + edges[1:]) / 2
    for i, (label, (resampled, observed, threshold)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(
            f"{_scale(x, lo, hi, PAD, WIDTH - PAD):.1f},{_scale(y, 0, ymax, HEIGHT - PAD, PAD):.1f}"
            for x, y in zip(mids, hists[label])
        )
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        xo = _scale(observed, lo, hi, PAD, WIDTH - PAD)
        parts.append(f'<line x1="{xo:.1f}" y1="{PAD}" x2="{xo:.1f}" y2="{HEIGHT - PAD}" '
                     f'stroke="{color}" stroke-dasharray="4 3"/>')
        xt = _scale(threshold, lo, hi, PAD, WIDTH - PAD)
        parts.append(f'<line x1="{xt:.1f}" y1="{PAD}" x2="{xt:.1f}" y2="{HEIGHT - PAD}" '
                     f'stroke="red" stroke-width="0.8"/>')
        parts.append(f'<text x="{WIDTH - PAD}" y="{PAD + 14 * i}" text-anchor="end" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def pcurve_svg(curves: dict[str, tuple[np.ndarray, np.ndarray]], alpha: float) -> str:
    """Step curves of p-value against contamination size, with the alpha line."""
    k_max = max(int(np.max(ks)) for ks, _ in curves.values()) or 1
    parts = _frame("p-value under contamination", "contaminated prompts k", "p-value")
    parts += _tick_labels(0, k_max, HEIGHT - PAD + 14)
    ya = _scale(alpha, 0, 1, HEIGHT - PAD, PAD)
    parts.append(f'<line x1="{PAD}" y1="{ya:.1f}" x2="{WIDTH - PAD}" y2="{ya:.1f}" stroke="red"/>')
    for i, (label, (ks, ps)) in enumerate(curves.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = []
        for j, (k, p) in enumerate(zip(ks, ps)):
            x = _scale(k, 0, k_max, PAD, WIDTH - PAD)
            y = _scale(p, 0, 1, HEIGHT - PAD, PAD)
            if j:
                pts.append(f"{x:.1f},{prev_y:.1f}")
            pts.append(f"{x:.1f},{y:.1f}")
            prev_y = y
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{" ".join(pts)}"/>')
        parts.append(f'<text x="{WIDTH - PAD}" y="{PAD + 14 * i}" text-anchor="end" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
