"""Self-contained SVG output for bounds tables.

Heatmaps use a 256-step linear ramp from ``RAMP_LO`` to ``RAMP_HI`` in RGB;
values are mapped linearly onto ``[min, max]`` of the plotted field and
quantized to the nearest step. Output depends only on the data, so equal
tables give byte-identical files.
"""

from __future__ import annotations

import numpy as np

RAMP_LO = (68, 1, 84)
RAMP_HI = (253, 231, 37)
HIST_BINS = 20


def ramp_color(t):
    k = int(round(min(max(t, 0.0), 1.0) * 255))
    rgb = [round(a + (b - a) * k / 255) for a, b in zip(RAMP_LO, RAMP_HI)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _header(width, height):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]


def heatmap_svg(mu, values, title, cell=4):
    """Heatmap of ``values`` on a tensor grid of two parameters."""
    mu = np.asarray(mu, dtype=float)
    values = np.asarray(values, dtype=float)
    xs = np.unique(mu[:, 0])
    ys = np.unique(mu[:, 1])
    ix = np.searchsorted(xs, mu[:, 0])
    iy = np.searchsorted(ys, mu[:, 1])
    lo, hi = float(np.nanmin(values)), float(np.nanmax(values))
    span = hi - lo if hi > lo else 1.0
    margin = 40
    width = 2 * margin + cell * len(xs)
    height = 2 * margin + cell * len(ys)
    out = _header(width, height)
    out.append(f'<text x="{margin}" y="{margin - 14}" font-family="sans-serif" font-size="12">{title}</text>')
    for i, j, v in zip(ix, iy, values):
        if not np.isfinite(v):
            continue
        x = margin + cell * i
        y = margin + cell * (len(ys) - 1 - j)
        out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{ramp_color((v - lo) / span)}"/>')
    out.append(
        f'<text x="{margin}" y="{height - margin + 16}" font-family="sans-serif" font-size="10">'
        f"mu1 [{xs[0]:.4g}, {xs[-1]:.4g}]  mu2 [{ys[0]:.4g}, {ys[-1]:.4g}]  "
        f"range [{lo:.6g}, {hi:.6g}]</text>"
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def gap_histogram(eps, bins=HIST_BINS):
    """Counts of ``eps`` in ``bins`` uniform bins on ``[0, 1]`` (clipped)."""
    eps = np.clip(np.asarray(eps, dtype=float), 0.0, 1.0)
    counts, edges = np.histogram(eps[np.isfinite(eps)], bins=bins, range=(0.0, 1.0))
    return counts, edges


def histogram_svg(eps, title, bins=HIST_BINS):
    counts, _ = gap_histogram(eps, bins)
    width, height, margin = 420, 260, 40
    bar = (width - 2 * margin) / bins
    top = max(int(counts.max()), 1)
    out = _header(width, height)
    out.append(f'<text x="{margin}" y="{margin - 14}" font-family="sans-serif" font-size="12">{title}</text>')
    for k, c in enumerate(counts):
        h = (height - 2 * margin) * c / top
        x = margin + k * bar
        y = height - margin - h
        out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar:.2f}" height="{h:.2f}" fill="{ramp_color(0.35)}"/>')
    out.append(
        f'<text x="{margin}" y="{height - margin + 16}" font-family="sans-serif" font-size="10">'
        f"(ub - lb) / ub on [0, 1], {bins} bins, max count {top}</text>"
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
