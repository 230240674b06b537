"""Minimal static SVG line and map plots (no plotting dependency)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_plot", "map_plot"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")
_W, _H = 640, 420
_L, _R, _T, _B = 70, 20, 30, 50


def _f(v):
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


class _Frame:
    def __init__(self, xlim, ylim, logy=False, w=_W, h=_H):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.logy = logy
        self.w, self.h = w, h

    def _ty(self, y):
        return math.log10(y) if self.logy else y

    def px(self, x):
        return _L + (x - self.x0) / (self.x1 - self.x0) * (self.w - _L - _R)

    def py(self, y):
        a, b = self._ty(self.y0), self._ty(self.y1)
        return self.h - _B - (self._ty(y) - a) / (b - a) * (self.h - _T - _B)

    def valid(self, x, y):
        if not (math.isfinite(x) and math.isfinite(y)):
            return False
        if self.logy and y <= 0:
            return False
        return True

    def axes(self, xlabel, ylabel, title):
        out = [
            f'<rect x="{_L}" y="{_T}" width="{self.w - _L - _R}" height="{self.h - _T - _B}" '
            'fill="none" stroke="#000"/>'
        ]
        for t in _ticks(self.x0, self.x1):
            x = self.px(t)
            out.append(f'<line x1="{_f(x)}" y1="{self.h - _B}" x2="{_f(x)}" y2="{self.h - _B + 5}" stroke="#000"/>')
            out.append(f'<text x="{_f(x)}" y="{self.h - _B + 18}" text-anchor="middle" font-size="11">{t:.4g}</text>')
        if self.logy:
            yt = [10.0**k for k in range(math.ceil(math.log10(self.y0)), math.floor(math.log10(self.y1)) + 1)]
        else:
            yt = _ticks(self.y0, self.y1)
        for t in yt:
            y = self.py(t)
            out.append(f'<line x1="{_L - 5}" y1="{_f(y)}" x2="{_L}" y2="{_f(y)}" stroke="#000"/>')
            out.append(f'<text x="{_L - 8}" y="{_f(y + 4)}" text-anchor="end" font-size="11">{t:.4g}</text>')
        out.append(
            f'<text x="{(self.w + _L - _R) / 2:.1f}" y="{self.h - 10}" text-anchor="middle" '
            f'font-size="13">{escape(xlabel)}</text>'
        )
        out.append(
            f'<text x="16" y="{(self.h + _T - _B) / 2:.1f}" text-anchor="middle" font-size="13" '
            f'transform="rotate(-90 16 {(self.h + _T - _B) / 2:.1f})">{escape(ylabel)}</text>'
        )
        if title:
            out.append(f'<text x="{(self.w + _L - _R) / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>')
        return out

    def polyline(self, xs, ys, color, width=1.5, dash=None):
        segs, cur = [], []
        for x, y in zip(xs, ys):
            x, y = float(x), float(y)
            if self.valid(x, y) and (not self.logy or self.y0 <= y <= self.y1 * 10):
                y = min(max(y, self.y0), self.y1) if self.logy else y
                cur.append(f"{_f(self.px(x))},{_f(self.py(y))}")
            elif cur:
                segs.append(cur)
                cur = []
        if cur:
            segs.append(cur)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return [
            f'<polyline points="{" ".join(s)}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>'
            for s in segs
            if len(s) > 1
        ]


def _limits(vals, logy):
    v = np.asarray([x for x in vals if math.isfinite(x) and (x > 0 or not logy)], dtype=float)
    if v.size == 0:
        return (1e-3, 1.0) if logy else (0.0, 1.0)
    lo, hi = float(v.min()), float(v.max())
    if logy:
        lo = max(lo, hi * 1e-8)
        return 10 ** math.floor(math.log10(lo)), 10 ** math.ceil(math.log10(hi))
    if hi == lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _doc(body, w=_W, h=_H):
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">\n'
    return head + '<rect width="100%" height="100%" fill="#fff"/>\n' + "\n".join(body) + "\n</svg>\n"


def line_plot(traces, xlabel="", ylabel="", title="", logy=False, vlines=(), xlim=None, ylim=None) -> str:
    """``traces``: list of (label, xs, ys) or (label, xs, ys, dash)."""
    xs_all = [float(x) for t in traces for x in t[1] if math.isfinite(float(x))]
    ys_all = [float(y) for t in traces for y in t[2]]
    if xlim is None:
        xlim = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
        if xlim[0] == xlim[1]:
            xlim = (xlim[0] - 1, xlim[1] + 1)
    if ylim is None:
        ylim = _limits(ys_all, logy)
    fr = _Frame(xlim, ylim, logy)
    body = fr.axes(xlabel, ylabel, title)
    for x, label in vlines:
        if xlim[0] <= x <= xlim[1]:
            px = _f(fr.px(x))
            body.append(f'<line x1="{px}" y1="{_T}" x2="{px}" y2="{_H - _B}" stroke="#888" stroke-dasharray="4 3"/>')
            if label:
                body.append(f'<text x="{px}" y="{_T + 12}" font-size="10" fill="#555">{escape(label)}</text>')
    for k, t in enumerate(traces):
        color = _COLORS[k % len(_COLORS)]
        dash = t[3] if len(t) > 3 else None
        body.extend(fr.polyline(t[1], t[2], color, dash=dash))
        body.append(
            f'<text x="{_W - _R - 8}" y="{_T + 16 + 14 * k}" text-anchor="end" font-size="11" '
            f'fill="{color}">{escape(str(t[0]))}</text>'
        )
    return _doc(body)


def map_plot(x, y, Z, lines=(), points=(), shade=None, xlabel="", ylabel="", title="") -> str:
    """Sign-and-magnitude map of Z[i, j] over (x[i], y[j]) with overlays.

    ``lines``: (label, xs, ys, dash); ``points``: (x, y, label);
    ``shade``: (xs, ys) polygon filled under the activation path.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fr = _Frame((float(x.min()), float(x.max())), (float(y.min()), float(y.max())))
    body = []
    finite = np.isfinite(Z)
    scale = float(np.max(np.abs(Z[finite]))) if np.any(finite) else 1.0
    dx = (fr.px(x[-1]) - fr.px(x[0])) / max(len(x) - 1, 1)
    dy = (fr.py(y[0]) - fr.py(y[-1])) / max(len(y) - 1, 1)
    for i in range(len(x)):
        for j in range(len(y)):
            z = Z[i, j]
            if not math.isfinite(z):
                color = "#eeeeee"
            else:
                a = min(1.0, (abs(z) / scale) ** 0.25) if scale > 0 else 0.0
                c = int(round(255 * (1 - 0.6 * a)))
                color = f"#ff{c:02x}{c:02x}" if z > 0 else f"#{c:02x}{c:02x}ff"
            body.append(
                f'<rect x="{_f(fr.px(x[i]) - dx / 2)}" y="{_f(fr.py(y[j]) - dy / 2)}" '
                f'width="{_f(dx + 0.3)}" height="{_f(dy + 0.3)}" fill="{color}"/>'
            )
    if shade is not None:
        xs, ys = shade
        pts = [f"{_f(fr.px(a))},{_f(fr.py(b))}" for a, b in zip(xs, ys) if math.isfinite(a) and math.isfinite(b)]
        pts += [f"{_f(fr.px(xs[-1]))},{_f(fr.py(0.0))}", f"{_f(fr.px(xs[0]))},{_f(fr.py(0.0))}"]
        body.append(f'<polygon points="{" ".join(pts)}" fill="#2ca02c" fill-opacity="0.25" stroke="none"/>')
    body.extend(fr.axes(xlabel, ylabel, title))
    for k, ln in enumerate(lines):
        label, xs, ys = ln[0], ln[1], ln[2]
        dash = ln[3] if len(ln) > 3 else None
        color = _COLORS[k % len(_COLORS)]
        keep = [(a, b) for a, b in zip(xs, ys) if fr.y0 <= b <= fr.y1 and fr.x0 <= a <= fr.x1]
        if keep:
            body.extend(fr.polyline([a for a, _ in keep], [b for _, b in keep], color, width=2, dash=dash))
        body.append(
            f'<text x="{_W - _R - 8}" y="{_T + 16 + 14 * k}" text-anchor="end" font-size="11" '
            f'fill="{color}">{escape(label)}</text>'
        )
    for px_, py_, label in points:
        if fr.x0 <= px_ <= fr.x1 and fr.y0 <= py_ <= fr.y1:
            body.append(f'<circle cx="{_f(fr.px(px_))}" cy="{_f(fr.py(py_))}" r="4" fill="#000"/>')
            if label:
                body.append(f'<text x="{_f(fr.px(px_) + 6)}" y="{_f(fr.py(py_) - 6)}" font-size="10">{escape(label)}</text>')
    return _doc(body)
