"""Minimal SVG line, scatter and histogram plots (no plotting dependency)."""
from xml.sax.saxutils import escape

import numpy as np

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
W, H = 640, 420
ML, MR, MT, MB = 70, 20, 40, 50


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    step = 10 ** np.floor(np.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def _num(v):
    return f"{v:.4g}"


class Axes:
    def __init__(self, xs, ys, logx=False, logy=False):
        self.logx, self.logy = logx, logy
        x = np.concatenate([self._tx(np.asarray(a, float)) for a in xs])
        y = np.concatenate([self._ty(np.asarray(a, float)) for a in ys])
        x, y = x[np.isfinite(x)], y[np.isfinite(y)]
        self.x0, self.x1 = (x.min(), x.max()) if x.size else (0.0, 1.0)
        self.y0, self.y1 = (y.min(), y.max()) if y.size else (0.0, 1.0)
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 0.5, self.x1 + 0.5
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 0.5, self.y1 + 0.5
        pad = 0.04 * (self.y1 - self.y0)
        self.y0 -= pad
        self.y1 += pad

    def _tx(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log10(x) if self.logx else x

    def _ty(self, y):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log10(y) if self.logy else y

    def px(self, x):
        return ML + (self._tx(np.asarray(x, float)) - self.x0) / (self.x1 - self.x0) * (W - ML - MR)

    def py(self, y):
        return H - MB - (self._ty(np.asarray(y, float)) - self.y0) / (self.y1 - self.y0) * (H - MT - MB)

    def frame(self, title, xlabel, ylabel):
        out = [f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" fill="none" stroke="#333"/>']
        for t in _ticks(self.x0, self.x1):
            if self.x0 <= t <= self.x1:
                p = ML + (t - self.x0) / (self.x1 - self.x0) * (W - ML - MR)
                lab = _num(10**t if self.logx else t)
                out.append(f'<line x1="{p:.2f}" y1="{H - MB}" x2="{p:.2f}" y2="{H - MB + 5}" stroke="#333"/>')
                out.append(f'<text x="{p:.2f}" y="{H - MB + 18}" font-size="11" text-anchor="middle">{lab}</text>')
        for t in _ticks(self.y0, self.y1):
            if self.y0 <= t <= self.y1:
                p = H - MB - (t - self.y0) / (self.y1 - self.y0) * (H - MT - MB)
                lab = _num(10**t if self.logy else t)
                out.append(f'<line x1="{ML - 5}" y1="{p:.2f}" x2="{ML}" y2="{p:.2f}" stroke="#333"/>')
                out.append(f'<text x="{ML - 8}" y="{p + 4:.2f}" font-size="11" text-anchor="end">{lab}</text>')
        out.append(f'<text x="{W / 2}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>')
        out.append(f'<text x="{W / 2}" y="{H - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
        out.append(f'<text x="16" y="{H / 2}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 16 {H / 2})">{escape(ylabel)}</text>')
        return out


def _doc(body):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">\n'
            '<rect width="100%" height="100%" fill="white"/>\n' + "\n".join(body) + "\n</svg>\n")


def line_plot(series, title="", xlabel="", ylabel="", logx=False, logy=False, markers=False):
    """``series``: list of (label, x, y). Returns the SVG text."""
    ax = Axes([s[1] for s in series], [s[2] for s in series], logx, logy)
    body = ax.frame(title, xlabel, ylabel)
    for k, (label, x, y) in enumerate(series):
        c = COLORS[k % len(COLORS)]
        px, py = ax.px(x), ax.py(y)
        ok = np.isfinite(px) & np.isfinite(py)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px[ok], py[ok]))
        if markers:
            body += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{c}"/>' for a, b in zip(px[ok], py[ok])]
        else:
            body.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        body.append(f'<text x="{W - MR - 6}" y="{MT + 16 + 15 * k}" font-size="11" text-anchor="end" '
                    f'fill="{c}">{escape(str(label))}</text>')
    return _doc(body)


def scatter_plot(series, **kw):
    return line_plot(series, markers=True, **kw)


def histogram(values, bins=50, title="", xlabel="", density=True, overlay=None):
    """Bar histogram, optionally with (label, x, y) overlay curves."""
    v = np.asarray(values, float).ravel()
    h, e = np.histogram(v, bins=bins, density=density)
    xs, ys = [e], [np.concatenate([h, [0.0]])]
    for _, x, y in overlay or []:
        xs.append(np.asarray(x, float))
        ys.append(np.asarray(y, float))
    ax = Axes(xs, ys)
    ax.y0 = min(ax.y0, 0.0)
    body = ax.frame(title, xlabel, "density" if density else "count")
    base = ax.py(0.0)
    for a, b, c in zip(e[:-1], e[1:], h):
        x0, x1, top = ax.px(a), ax.px(b), ax.py(c)
        body.append(f'<rect x="{x0:.2f}" y="{top:.2f}" width="{max(x1 - x0, 0.1):.2f}" '
                    f'height="{max(base - top, 0):.2f}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>')
    for k, (label, x, y) in enumerate(overlay or []):
        c = COLORS[(k + 1) % len(COLORS)]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(ax.px(x), ax.py(y)))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        body.append(f'<text x="{W - MR - 6}" y="{MT + 16 + 15 * k}" font-size="11" text-anchor="end" '
                    f'fill="{c}">{escape(str(label))}</text>')
    return _doc(body)


def save(svg_text, path):
    with open(path, "w") as fh:
        fh.write(svg_text)
