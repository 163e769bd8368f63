"""CSV matrix files and a small self-contained SVG log-log chart."""

from __future__ import annotations

import csv
import math
from xml.sax.saxutils import escape

import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if f.is_integer() and abs(f) < 2**53:
        return str(int(f))
    return repr(f)


def write_matrix_csv(fh, matrix, zone_ids):
    """Dense matrix with a header row of zone ids and one row per origin zone."""
    m = np.asarray(matrix)
    ids = list(zone_ids)
    if m.shape != (len(ids), len(ids)):
        raise ValueError(f"matrix shape {m.shape} does not match {len(ids)} zone ids")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["zone_id", *ids])
    for zid, row in zip(ids, m.tolist()):
        w.writerow([zid, *(_fmt(v) for v in row)])


def read_matrix_csv(fh) -> tuple[list[str], np.ndarray]:
    rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError("empty matrix file")
    ids = [c.strip() for c in rows[0][1:]]
    if len(rows) - 1 != len(ids):
        raise ValueError(f"matrix has {len(rows) - 1} rows for {len(ids)} columns")
    out = np.empty((len(ids), len(ids)))
    for i, row in enumerate(rows[1:]):
        lineno = i + 2
        if row[0].strip() != ids[i]:
            raise ValueError(f"line {lineno}: row id {row[0]!r} does not match column {ids[i]!r}")
        if len(row) != len(ids) + 1:
            raise ValueError(f"line {lineno}: expected {len(ids) + 1} fields, got {len(row)}")
        try:
            out[i] = [float(v) for v in row[1:]]
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric entry") from None
    return ids, out


# svg

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _log_ticks(lo, hi, base):
    a, b = math.floor(math.log(lo, base) + 1e-9), math.ceil(math.log(hi, base) - 1e-9)
    return [base**e for e in range(a, b + 1)]


def loglog_svg(series: dict, xlabel: str, ylabel: str, title: str = "", width=640, height=420) -> str:
    """Render ``{name: (xs, ys)}`` as a log-log line chart.

    x ticks are powers of two, y ticks powers of ten. Output depends only on
    the data, so identical inputs give identical bytes.
    """
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys) if x > 0 and y > 0]
    if not pts:
        raise ValueError("nothing to plot")
    xt = _log_ticks(min(p[0] for p in pts), max(p[0] for p in pts), 2)
    yt = _log_ticks(min(p[1] for p in pts), max(p[1] for p in pts), 10)
    lx0, lx1 = math.log2(xt[0]), math.log2(xt[-1])
    ly0, ly1 = math.log10(yt[0]), math.log10(yt[-1])
    if lx1 == lx0:
        lx1 += 1
    if ly1 == ly0:
        ly1 += 1
    left, right, top, bottom = 70, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (math.log2(x) - lx0) / (lx1 - lx0) * pw

    def py(y):
        return top + ph - (math.log10(y) - ly0) / (ly1 - ly0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for x in xt:
        X = px(x)
        out.append(f'<line x1="{X:.2f}" y1="{top}" x2="{X:.2f}" y2="{top + ph}" stroke="#ddd"/>')
        label = f"2^{round(math.log2(x))}"
        out.append(f'<text x="{X:.2f}" y="{top + ph + 15}" text-anchor="middle">{label}</text>')
    for y in yt:
        Y = py(y)
        out.append(f'<line x1="{left}" y1="{Y:.2f}" x2="{left + pw}" y2="{Y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{Y + 4:.2f}" text-anchor="end">1e{round(math.log10(y))}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for k, (name, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if x > 0 and y > 0)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in zip(xs, ys):
            if x > 0 and y > 0:
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        ly = top + 14 + 16 * k
        out.append(f'<line x1="{left + 10}" y1="{ly}" x2="{left + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 36}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
